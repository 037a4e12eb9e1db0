import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from pcm_hems.errors import ConfigurationError
from pcm_hems.models import ProjectConfig, RunManifest, ScenarioConfig, SiteRecord, SiteSettings, load_config
from pcm_hems.thermal import reference_building

EXAMPLE = Path(__file__).resolve().parents[1] / "config" / "example.json"


class TestLoadConfig:
    def test_defaults_without_a_file(self):
        project = load_config(None)
        assert project.pcm_label == "MT21"
        assert project.solver.resolution == 0.1
        assert project.tariff.feed_in == 0.09
        assert project.scenarios == ["DB", "DB-PCM", "HEMS", "HEMS-PCM"]

    def test_example_config(self):
        project = load_config(EXAMPLE)
        assert [s.name for s in project.sites] == ["syd01", "bne01", "mel01", "adl01", "per01"]
        assert project.pv_scalings == [1.0, 1.6]
        assert project.tariff.schedule().labels == ["off-peak", "shoulder", "peak"]
        assert project.pcm_spec("MT23").melting_point == 23.0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "none.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError, match="not valid JSON"):
            load_config(path)

    @pytest.mark.parametrize(
        "doc",
        [
            {"unknown_key": 1},
            {"pcm_label": "MT99"},
            {"pv_scalings": [0.0]},
            {"solver": {"comfort": [24.0, 20.0]}},
            {"solver": {"transition": "surrogate", "state_mode": "envelope"}},
            {"hvac": {"cop": 0.9}},
            {"sites": [{"name": "a"}, {"name": "a"}]},
        ],
    )
    def test_invalid_settings(self, tmp_path, doc):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigurationError, match="invalid config"):
            load_config(path)

    def test_pcm_mass_must_match_layer_volume(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"pcm": {"MT21": {"melting_point": 21.0, "mass": 5000.0}}}))
        with pytest.raises(ConfigurationError, match="invalid config") as info:
            load_config(path)
        assert "inconsistent with rho*d*area" in str(info.value)

    def test_resized_building_needs_a_resized_pcm(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"building": {"length": 12.0}}))
        with pytest.raises(ConfigurationError, match="MT21"):
            load_config(path)

        # 12 x 6 x 2.7 m: 2 * 72 + 2.7 * 36 = 241.2 m2 gross
        doc = {"building": {"length": 12.0},
               "pcm": {"MT21": {"melting_point": 21.0, "mass": 545.0 * 0.03 * 241.2}}}
        path.write_text(json.dumps(doc))
        assert load_config(path).pcm_spec().mass == pytest.approx(3943.62)

    def test_mass_within_one_percent_is_accepted(self):
        project = ProjectConfig(pcm={"MT21": {"melting_point": 21.0, "mass": 2805.66 * 1.009}})
        assert project.pcm_spec().mass == pytest.approx(2830.9, abs=0.1)


class TestProjectConfig:
    def test_hvac_runs_flat_out_unless_limited(self):
        assert ProjectConfig().hvac.spec().supply_limit is False
        assert ProjectConfig(hvac={"supply_limit": True}).building_model().hvac.supply_limit is True

    def test_default_building_is_the_reference(self):
        assert ProjectConfig().building_model().params == reference_building().params

    def test_unknown_pcm_variant(self):
        with pytest.raises(ConfigurationError, match="unknown PCM variant"):
            ProjectConfig().pcm_spec("MT40")

    def test_scenario_configs(self, tmp_path):
        project = ProjectConfig(pv_scalings=[1.0, 1.6])
        site = SiteSettings(name="syd", city="sydney")
        configs = project.scenario_configs(site, tmp_path / "data", tmp_path / "out")
        assert len(configs) == 8
        labels = [c.run_label for c in configs]
        assert labels[:4] == ["DB_pv1", "DB-PCM_MT21_pv1", "HEMS_pv1", "HEMS-PCM_MT21_pv1"]
        assert labels[-1] == "HEMS-PCM_MT21_pv1.6"
        assert configs[0].pcm_label is None
        assert configs[0].data["weather"] == tmp_path / "data" / "syd" / "weather.csv"

    def test_pcm_scenario_needs_label(self, tmp_path):
        with pytest.raises(ValidationError):
            ScenarioConfig(site="s", scenario="DB-PCM", controller="deadband", pcm_enabled=True,
                           data={}, output_dir=str(tmp_path), seed=1)

    def test_missing_site_files(self, tmp_path):
        config = ProjectConfig().scenario_configs(SiteSettings(name="ghost"), tmp_path, tmp_path)[0]
        with pytest.raises(ConfigurationError, match="missing data files"):
            config.check_files()

    def test_absolute_site_paths_are_kept(self, tmp_path):
        site = SiteSettings(name="x", weather=str(tmp_path / "w.csv"))
        paths = site.paths("data")
        assert paths["weather"] == tmp_path / "w.csv"
        assert paths["pv"] == Path("data") / "x" / "pv.csv"
        assert site.group == "x"


class TestRunManifest:
    def test_failed_sites_and_save(self, tmp_path):
        manifest = RunManifest(config_hash="abc", code_version="0", seeds={"project": 1}, workers=2,
                               sites={"a": SiteRecord(status="done"), "b": SiteRecord(status="failed"),
                                      "c": SiteRecord()})
        assert manifest.failed == ["b", "c"]
        doc = json.loads(manifest.save(tmp_path / "manifest.json").read_text())
        assert doc["sites"]["b"]["status"] == "failed"
