import logging
import math

import numpy as np
import pandas as pd
import pytest

from pcm_hems.data import DEFAULT_TARIFF
from pcm_hems.errors import ConfigurationError, SelectionError
from pcm_hems.runner import (
    compare_scenarios,
    emit_plot_data,
    emit_site_plots,
    load_site,
    melting_point_sweep,
    run_scenario,
    scenario_table,
    week_frame,
)
from pcm_hems.storage import ResultStore


def site_inputs(project, tmp_path, scenarios=None):
    site = project.sites[0]
    configs = project.scenario_configs(site, tmp_path / "data", tmp_path / "results", scenarios)
    data = load_site(site.name, configs[0].data).horizon(project.horizon.start, project.horizon.days)
    return configs, data


def summary(site, scenario, cost, sc, group="g", pcm_label=None, pv_scaling=1.0):
    return {"site": site, "group": group, "scenario": scenario, "cost": cost, "sc": sc,
            "pcm_label": pcm_label, "pv_scaling": pv_scaling, "pv_kwh": 10.0, "demand_kwh": 20.0,
            "hvac_kwh": 5.0, "hvac_transitions": 4}


class TestRunScenario:
    def test_deadband_run(self, small_project, tmp_path):
        configs, data = site_inputs(small_project, tmp_path, ["DB"])
        store = ResultStore(tmp_path / "results")
        run = run_scenario(configs[0], small_project, data, "sydney", store=store)

        assert len(run.trajectory) == 48
        assert run.trajectory["timestamp"].iloc[0] == "2019-07-01T00:00:00"
        assert set(run.trajectory["action"]) <= {"off", "heat", "cool"}
        assert run.summary["run_label"] == "DB_pv1"
        assert run.summary["group"] == "sydney"
        assert sum(run.summary["cost_by_window"].values()) == pytest.approx(run.summary["cost"])
        assert np.allclose(run.trajectory["t_in_start"].iloc[1:].to_numpy(),
                           run.trajectory["t_in"].iloc[:-1].to_numpy())
        assert (tmp_path / "results" / "syd" / "DB_pv1" / "summary.json").is_file()
        assert run.files["trajectory"].name == "trajectory.csv"

    def test_pcm_run_reports_state_of_charge(self, small_project, tmp_path):
        configs, data = site_inputs(small_project, tmp_path, ["DB-PCM"])
        run = run_scenario(configs[0], small_project, data)
        assert configs[0].pcm_label == "MT21"
        assert run.trajectory["soc"].abs().sum() > 0

    def test_hems_run_is_deterministic(self, small_project, tmp_path):
        configs, data = site_inputs(small_project, tmp_path, ["HEMS"])
        first = ResultStore(tmp_path / "first")
        second = ResultStore(tmp_path / "second")
        a = run_scenario(configs[0], small_project, data, store=first)
        run_scenario(configs[0], small_project, data, store=second)

        for name in ("summary.json", "trajectory.csv"):
            assert (first.run_dir("syd", "HEMS_pv1") / name).read_bytes() == \
                (second.run_dir("syd", "HEMS_pv1") / name).read_bytes()
        assert a.summary["solver"]["transition"] == "exact"
        assert "total_s" in a.timings and "total_s" not in a.summary

    def test_pv_scaling_scales_generation(self, small_project, tmp_path):
        site = small_project.sites[0]
        configs = small_project.scenario_configs(site, tmp_path / "data", tmp_path / "results", ["DB"],
                                                 pv_scalings=[1.0, 2.0])
        data = load_site(site.name, configs[0].data).horizon("2019-07-01", 1)
        one = run_scenario(configs[0], small_project, data)
        two = run_scenario(configs[1], small_project, data)
        assert two.summary["pv_kwh"] == pytest.approx(2.0 * one.summary["pv_kwh"])
        assert two.summary["run_label"] == "DB_pv2"

    def test_horizon_outside_inputs(self, small_project, tmp_path):
        site = small_project.sites[0]
        configs = small_project.scenario_configs(site, tmp_path / "data", tmp_path / "results")
        with pytest.raises(SelectionError):
            load_site(site.name, configs[0].data).horizon("2020-01-01", 1)


class TestCompare:
    @pytest.fixture
    def summaries(self):
        return [
            summary("a", "HEMS", 200.0, 60.0, group="g1"),
            summary("a", "HEMS-PCM", 150.0, 55.0, group="g1", pcm_label="MT21"),
            summary("b", "HEMS", 100.0, 50.0, group="g1"),
            summary("b", "HEMS-PCM", 90.0, 48.0, group="g1", pcm_label="MT21"),
            summary("c", "HEMS", 80.0, 40.0, group="g2"),
        ]

    def test_site_rows(self, summaries, caplog):
        with caplog.at_level(logging.WARNING, logger="pcm_hems.runner.compare"):
            comparison = compare_scenarios(summaries)
        sites = comparison.sites.set_index("site")
        assert sites.loc["a", "saving"] == pytest.approx(50.0)
        assert sites.loc["a", "saving_pct"] == pytest.approx(25.0)
        assert sites.loc["b", "sc_reduction"] == pytest.approx(2.0)
        assert bool(sites.loc["c", "missing"])
        assert math.isnan(sites.loc["c", "saving"])
        assert "site 'c' lacks a HEMS-PCM result" in caplog.text

    def test_group_statistics(self, summaries):
        groups = compare_scenarios(summaries).groups.set_index("group")
        assert list(groups.index) == ["g1", "g2", "all"]
        assert groups.loc["g1", "saving_mean"] == pytest.approx(30.0)
        assert groups.loc["g1", "saving_pct_mean"] == pytest.approx(17.5)
        assert groups.loc["g1", "saving_se"] == pytest.approx(20.0)
        assert groups.loc["all", "saving_n"] == 2
        assert groups.loc["all", "saving_missing"] == 1
        assert bool(groups.loc["g2", "saving_insufficient"])
        assert math.isnan(groups.loc["g2", "saving_mean"])

    def test_histograms_and_files(self, summaries, tmp_path):
        comparison = compare_scenarios(summaries, bins=2)
        assert comparison.histograms["saving_pct"]["count"].sum() == 2
        files = comparison.write(ResultStore(tmp_path))
        assert files["sites"].endswith("compare_HEMS_vs_HEMS-PCM_pv1_sites.csv")
        assert pd.read_csv(files["groups"])["group"].tolist() == ["g1", "g2", "all"]

    def test_ambiguous_pcm_variants(self, summaries):
        summaries.append(summary("a", "HEMS-PCM", 140.0, 54.0, group="g1", pcm_label="MT23"))
        with pytest.raises(ConfigurationError, match="several"):
            compare_scenarios(summaries)
        picked = compare_scenarios(summaries, pcm_label="MT23").sites.set_index("site")
        assert picked.loc["a", "saving"] == pytest.approx(60.0)

    def test_nothing_to_compare(self, summaries):
        with pytest.raises(ConfigurationError, match="no results"):
            compare_scenarios(summaries, pv_scaling=1.6)

    def test_scenario_table(self, summaries):
        table = scenario_table(summaries).set_index("site")
        assert list(table.index) == ["a", "b", "c"]
        assert table.loc["a", "HEMS_cost"] == 200.0
        assert table.loc["b", "HEMS-PCM_sc"] == 48.0
        assert math.isnan(table.loc["c", "HEMS-PCM_cost"])

    def test_melting_point_sweep(self, summaries):
        summaries += [
            summary("a", "HEMS-PCM", 180.0, 58.0, group="g1", pcm_label="MT23"),
            summary("b", "HEMS-PCM", 95.0, 49.0, group="g1", pcm_label="MT23"),
        ]
        sweep = melting_point_sweep(summaries, ["MT21", "MT23"], [1.0])
        assert list(sweep.columns[:3]) == ["group", "pv_scaling", "sites"]
        all_row = sweep.set_index("group").loc["all"]
        assert all_row["MT21_saving_mean"] == pytest.approx(30.0)
        assert all_row["MT23_saving_mean"] == pytest.approx(12.5)


class TestStore:
    def test_nan_sc_survives_the_round_trip(self, tmp_path):
        store = ResultStore(tmp_path)
        frame = pd.DataFrame({"timestamp": ["2019-01-01T00:00:00"], "t_in": [21.0]})
        store.write_run("s", "DB_pv1", frame, {"site": "s", "sc": float("nan"), "cost": np.float64(1.5)})
        doc = store.read_summary("s", "DB_pv1")
        assert math.isnan(doc["sc"])
        assert doc["cost"] == 1.5
        assert len(store.summaries()) == 1
        assert "null" in (store.run_dir("s", "DB_pv1") / "summary.json").read_text()

    def test_missing_run(self, tmp_path):
        from pcm_hems.errors import LoadError

        with pytest.raises(LoadError, match="no results"):
            ResultStore(tmp_path).read_summary("s", "DB_pv1")


class TestPlots:
    @pytest.fixture
    def trajectory(self):
        index = pd.date_range("2019-07-01", periods=8 * 48, freq="30min")
        k = np.arange(len(index))
        return pd.DataFrame({
            "timestamp": index.strftime("%Y-%m-%dT%H:%M:%S"),
            "t_out": 10.0 + np.sin(k / 8.0), "t_in": np.full(len(k), 21.0),
            "pv": np.zeros(len(k)), "demand": np.full(len(k), 0.2), "hvac": np.full(len(k), 0.1),
        })

    def test_week_extract(self, trajectory):
        week = week_frame(trajectory, "2019-07-02", DEFAULT_TARIFF)
        assert len(week) == 336
        assert week["timestamp"].iloc[0] == "2019-07-02T00:00:00"
        assert list(week.columns) == ["timestamp", "t_out", "t_in", "pv", "demand", "hvac",
                                      "tariff_window", "tariff_boundary"]
        # four window changes a day
        assert week["tariff_boundary"].sum() == 28
        assert week.loc[week["timestamp"] == "2019-07-02T15:00:00", "tariff_window"].item() == "peak"

    def test_week_outside_trajectory(self, trajectory):
        with pytest.raises(SelectionError, match="not covered"):
            week_frame(trajectory, "2019-07-05", DEFAULT_TARIFF)

    def test_emit_plot_data(self, trajectory, tmp_path):
        path = emit_plot_data(trajectory, "2019-07-02", DEFAULT_TARIFF, tmp_path / "week.csv")
        frame = pd.read_csv(path)
        assert len(frame) == 336
        assert frame["timestamp"].iloc[-1] == "2019-07-08T23:30:00"

    def test_site_plots_from_store(self, trajectory, tmp_path):
        store = ResultStore(tmp_path)
        store.write_run("syd", "DB_pv1", trajectory, {"site": "syd"})
        paths = emit_site_plots(store, "syd", ["DB_pv1"], ["2019-07-01"], DEFAULT_TARIFF)
        assert paths == [tmp_path / "plots" / "syd" / "DB_pv1_2019-07-01.csv"]
        assert len(pd.read_csv(paths[0])) == 336


@pytest.mark.slow
def test_four_scenarios_point_the_expected_way(project_factory, tmp_path):
    project = project_factory(days=2)
    configs, data = site_inputs(project, tmp_path)
    runs = {c.scenario: run_scenario(c, project, data).summary for c in configs}
    assert sorted(runs) == ["DB", "DB-PCM", "HEMS", "HEMS-PCM"]

    assert runs["HEMS"]["cost"] <= runs["DB"]["cost"]
    assert runs["HEMS-PCM"]["hvac_kwh"] < runs["HEMS"]["hvac_kwh"]
    assert runs["DB-PCM"]["hvac_transitions"] < runs["DB"]["hvac_transitions"]
    assert runs["HEMS-PCM"]["sc"] <= runs["HEMS"]["sc"]

    site = compare_scenarios(list(runs.values())).sites.set_index("site").loc["syd"]
    assert site["saving"] == pytest.approx(runs["HEMS"]["cost"] - runs["HEMS-PCM"]["cost"])
    assert site["sc_reduction"] >= 0.0
