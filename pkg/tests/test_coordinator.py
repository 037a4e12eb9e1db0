import json
import logging
from types import SimpleNamespace

import pytest

import pcm_hems.coordinator.coordinator as coordinator_module
from pcm_hems.coordinator import run_project
from pcm_hems.coordinator.coordinator import handle_event, make_jobs, surrogate_benchmark
from pcm_hems.errors import ConfigurationError
from pcm_hems.models import ProjectConfig, RunManifest, SiteRecord
from pcm_hems.storage import ResultStore
from pcm_hems.workers import registry
from pcm_hems.workers.site_worker import SiteJob, site_configs


def run_dirs(store: ResultStore, site: str) -> list[str]:
    return sorted(p.name for p in (store.root / site).iterdir() if p.is_dir())


class TestJobs:
    def test_one_job_per_site(self, project_factory, tmp_path):
        project = project_factory(sites=(("syd", "sydney"), ("mel", "melbourne")))
        jobs = make_jobs(project, tmp_path / "data", tmp_path / "out")
        assert [j.site for j in jobs] == ["syd", "mel"]
        assert jobs[0].scenarios is None

    def test_site_subset(self, project_factory, tmp_path):
        project = project_factory(sites=(("syd", "sydney"), ("mel", "melbourne")))
        assert [j.site for j in make_jobs(project, "d", "o", sites=["mel"])] == ["mel"]
        with pytest.raises(ConfigurationError, match="unknown sites"):
            make_jobs(project, "d", "o", sites=["hobart"])

    def test_no_sites(self, small_project):
        with pytest.raises(ConfigurationError, match="no sites"):
            make_jobs(small_project.model_copy(update={"sites": []}), "d", "o")

    def test_unknown_pcm_label(self, small_project):
        with pytest.raises(ConfigurationError, match="unknown PCM variant"):
            make_jobs(small_project, "d", "o", pcm_labels=["MT40"])

    def test_pcm_labels_do_not_duplicate_plain_runs(self, small_project, tmp_path):
        job = SiteJob("syd", str(tmp_path / "data"), str(tmp_path / "out"), pcm_labels=("MT21", "MT23"))
        labels = [c.run_label for c in site_configs(small_project, job)]
        assert labels == ["DB_pv1", "DB-PCM_MT21_pv1", "HEMS_pv1", "HEMS-PCM_MT21_pv1",
                          "DB-PCM_MT23_pv1", "HEMS-PCM_MT23_pv1"]


class TestEvents:
    def test_done_and_failed_update_the_manifest(self, tmp_path):
        manifest = RunManifest(config_hash="h", code_version="0", seeds={}, workers=1,
                               sites={"a": SiteRecord(), "b": SiteRecord()})
        record = SiteRecord(status="done", worker="w0").model_dump(mode="json")
        handle_event({"type": "DONE", "worker": "w0", "site": "a", "record": record}, manifest, "r", tmp_path)
        handle_event({"type": "FAILED", "worker": "w1", "site": "b", "error": "boom"}, manifest, "r", tmp_path)
        assert manifest.sites["a"].status == "done"
        assert manifest.sites["b"].error == "boom"
        assert manifest.failed == ["b"]
        actions = [json.loads(line)["action"] for line in (tmp_path / "activity.jsonl").read_text().splitlines()]
        assert actions == ["SITE_DONE", "SITE_FAILED"]
        assert registry.workers == {}


class TestRunProject:
    def test_inline_run_writes_every_scenario(self, small_project, tmp_path):
        manifest = run_project(small_project, tmp_path / "data", tmp_path / "out", workers=1,
                               scenarios=["DB", "DB-PCM"])
        store = ResultStore(tmp_path / "out")
        assert manifest.failed == []
        assert run_dirs(store, "syd") == ["DB-PCM_MT21_pv1", "DB_pv1"]
        record = manifest.sites["syd"]
        assert set(record.file_hashes) == set(record.files)
        assert len(set(record.input_hashes.values())) == 1

        saved = json.loads(store.manifest_path.read_text())
        assert saved["workers"] == 1
        assert saved["seeds"] == {"project": small_project.seed}
        assert "cpu" in saved["system"]
        assert (store.log_dir / "activity.jsonl").is_file()

    def test_failing_site_does_not_stop_the_others(self, project_factory, tmp_path):
        project = project_factory(sites=(("syd", "sydney"), ("mel", "melbourne")))
        (tmp_path / "data" / "mel" / "pv.csv").unlink()
        manifest = run_project(project, tmp_path / "data", tmp_path / "out", scenarios=["DB"])
        assert manifest.failed == ["mel"]
        assert "missing data files" in manifest.sites["mel"].error
        assert manifest.sites["syd"].status == "done"
        assert (tmp_path / "out" / "syd" / "DB_pv1" / "summary.json").is_file()

    def test_reruns_are_byte_identical(self, small_project, tmp_path):
        first = run_project(small_project, tmp_path / "data", tmp_path / "a", scenarios=["DB"])
        second = run_project(small_project, tmp_path / "data", tmp_path / "b", scenarios=["DB"])
        assert first.config_hash == second.config_hash
        assert first.sites["syd"].file_hashes == second.sites["syd"].file_hashes

    @pytest.mark.slow
    def test_worker_processes(self, project_factory, tmp_path):
        project = project_factory(sites=(("syd", "sydney"), ("mel", "melbourne")))
        manifest = run_project(project, tmp_path / "data", tmp_path / "out", workers=2, scenarios=["DB"])
        assert manifest.failed == []
        expected = {"inline"} if manifest.workers == 1 else {"w0", "w1"}
        assert {r.worker for r in manifest.sites.values()} <= expected
        assert registry.workers == {}


class TestSurrogateBenchmark:
    @pytest.fixture
    def fake_surrogate(self, monkeypatch, tmp_path):
        loaded = SimpleNamespace(model=object(), path=tmp_path / "MT21.json", report=SimpleNamespace(mae=0.04))
        monkeypatch.setattr(coordinator_module, "load_surrogate", lambda *args: loaded)

        def bench(speedup):
            monkeypatch.setattr(coordinator_module, "benchmark_transition",
                                lambda model, building: {"states": 1024, "speedup": speedup})

        return bench

    def test_slow_surrogate_is_flagged(self, fake_surrogate, caplog):
        fake_surrogate(12.0)
        with caplog.at_level(logging.WARNING, logger="pcm_hems.coordinator.coordinator"):
            bench = surrogate_benchmark(ProjectConfig())
        assert bench["validation_mae"] == 0.04
        assert "speed-up 12.0x is below 50x" in caplog.text

    def test_fast_surrogate_is_quiet(self, fake_surrogate, caplog):
        fake_surrogate(180.0)
        with caplog.at_level(logging.WARNING, logger="pcm_hems.coordinator.coordinator"):
            bench = surrogate_benchmark(ProjectConfig())
        assert bench["path"].endswith("MT21.json")
        assert "below" not in caplog.text
