import json
import logging

import numpy as np
import pytest
import torch

from pcm_hems.control import DeadbandConfig
from pcm_hems.errors import ConfigurationError, LoadError, SurrogateGateError, TrainingError
from pcm_hems.optimizer import (
    ExactTransition,
    MdpInstance,
    SurrogateTransition,
    TemperatureGrid,
    deadband_tracker,
    madp_solve,
    simulate_policy,
)
from pcm_hems.surrogate import (
    Normalization,
    SurrogateModel,
    TrainingConfig,
    TrainingSet,
    TransitionNet,
    benchmark_transition,
    closed_loop_drift,
    ensure_gate,
    generate_training_data,
    predict,
    report_path,
    sticky_action_sampler,
    surrogate_path,
    train,
    validate,
)
from pcm_hems.surrogate.training import ValidationReport
from pcm_hems.thermal import Action, ThermalState, reference_building, reference_pcm


def known_model(seed: int = 3) -> SurrogateModel:
    rng = np.random.default_rng(seed)
    norm = Normalization(
        x_mean=np.array([0.0, 22.0, 15.0, 15.0]), x_std=np.array([1.0, 4.0, 6.0, 6.0]),
        y_mean=np.array([22.0, 0.3]), y_std=np.array([4.0, 0.3]),
        x_min=np.array([-1.0, 10.0, -5.0, -5.0]), x_max=np.array([1.0, 35.0, 45.0, 45.0]),
    )
    return SurrogateModel(
        w1=rng.normal(0, 0.3, (16, 4)), b1=rng.normal(0, 0.1, 16),
        w2=rng.normal(0, 0.3, (2, 16)), b2=rng.normal(0, 0.1, 2),
        norm=norm, label="test",
    )


def linear_samples(n: int, seed: int = 0) -> TrainingSet:
    """A smooth synthetic response standing in for exact-model samples."""
    rng = np.random.default_rng(seed)
    action = rng.integers(0, 3, n).astype(np.int8)
    sign = np.select([action == 1, action == 2], [1.0, -1.0], 0.0)
    t_in_prev = rng.uniform(15.0, 30.0, n)
    t_out_prev = rng.uniform(0.0, 35.0, n)
    t_out = t_out_prev + rng.normal(0.0, 0.5, n)
    t_in = 0.8 * t_in_prev + 0.2 * t_out + 1.5 * sign
    frac = np.abs(sign) * 0.5
    return TrainingSet(action, t_in_prev, t_out_prev, t_out, t_in, frac, t_in_prev.copy())


class TestNetwork:
    def test_gradients(self):
        net = TransitionNet().double()
        x = torch.randn(8, 4, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(net, (x,))

    def test_numpy_inference_matches_torch(self):
        model = known_model()
        x = np.array([[1.0, 18.0, 5.0, 6.0], [-1.0, 27.0, 31.0, 30.0], [0.0, 22.0, 15.0, 15.5]])
        z = torch.from_numpy((x - model.norm.x_mean) / model.norm.x_std)
        with torch.no_grad():
            expected = model.to_network()(z).numpy() * model.norm.y_std + model.norm.y_mean
        assert model.forward_inputs(x) == pytest.approx(expected, abs=1e-12)

    def test_inputs_outside_envelope_are_clamped(self, caplog):
        model = known_model()
        with caplog.at_level(logging.WARNING, logger="pcm_hems.surrogate.network"):
            far = model.forward_inputs(np.array([[0.0, 60.0, 15.0, 15.0]]))
        edge = model.forward_inputs(np.array([[0.0, 35.0, 15.0, 15.0]]))
        assert far == pytest.approx(edge)
        assert "outside the training envelope" in caplog.text

    def test_off_reports_no_on_fraction(self):
        model = known_model()
        t_next, on = model.predict_slot(Action.OFF, 21.0, 10.0, 11.0)
        assert on == 0.0
        assert predict(model, Action.OFF, 21.0, 10.0, 11.0) == t_next
        _, on_heat = model.predict_slot(Action.HEAT, 21.0, 10.0, 11.0)
        assert 0.0 <= on_heat <= 1.0


class TestModelFiles:
    def test_save_and_load(self, tmp_path):
        model = known_model()
        path = model.save(surrogate_path(tmp_path, "MT21"))
        assert path.name == "surrogate_MT21.json"
        loaded = SurrogateModel.load(path)
        assert np.array_equal(loaded.w1, model.w1)
        assert np.array_equal(loaded.norm.x_max, model.norm.x_max)
        assert loaded.label == "test"

    def test_report_path_sits_next_to_model(self, tmp_path):
        assert report_path(tmp_path / "surrogate_nopcm.json") == tmp_path / "surrogate_nopcm.validation.json"

    def test_missing_file(self, tmp_path):
        with pytest.raises(LoadError, match="cannot read"):
            SurrogateModel.load(tmp_path / "absent.json")

    def test_wrong_version(self, tmp_path):
        doc = known_model().to_dict()
        doc["format_version"] = 99
        path = tmp_path / "old.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(LoadError, match="version"):
            SurrogateModel.load(path)

    def test_not_a_model(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something else"}))
        with pytest.raises(LoadError, match="not a surrogate"):
            SurrogateModel.load(path)

    def test_malformed_weights(self):
        doc = known_model().to_dict()
        del doc["weights"]["w2"]
        with pytest.raises(LoadError, match="malformed"):
            SurrogateModel.from_dict(doc)


class TestTrainingData:
    def test_empty_request(self, building):
        assert len(generate_training_data(np.zeros(100), building, 0)) == 0

    def test_short_corpus(self, building):
        with pytest.raises(ConfigurationError, match="corpus"):
            generate_training_data(np.zeros(10), building, 50)

    def test_samples_follow_the_exact_model(self, building, winter_day):
        corpus = np.tile(winter_day.t_out, 3)
        samples = generate_training_data(corpus, building, 200, seed=5, batch_episodes=8)
        assert len(samples) == 200
        row = samples.row(17)
        out = building.slot(samples.t_envelope_prev[17], row.t_in_prev, row.action, row.t_out_prev, row.t_out)
        assert row.t_in == pytest.approx(float(out.t_indoor))
        assert np.all(samples.on_fraction[samples.action == int(Action.OFF)] == 0.0)

    def test_deterministic_for_a_seed(self, building, winter_day):
        corpus = np.tile(winter_day.t_out, 3)
        a = generate_training_data(corpus, building, 64, seed=9, batch_episodes=8)
        b = generate_training_data(corpus, building, 64, seed=9, batch_episodes=8)
        assert np.array_equal(a.t_in, b.t_in)
        assert np.array_equal(a.action, b.action)

    def test_sticky_sampler(self):
        rng = np.random.default_rng(0)
        previous = np.full(50, int(Action.HEAT), dtype=np.int8)
        assert np.all(sticky_action_sampler(persistence=1.0)(rng, previous, 50) == int(Action.HEAT))
        fresh = sticky_action_sampler(persistence=0.0)(rng, None, 500)
        assert set(np.unique(fresh)) == {0, 1, 2}


class TestTraining:
    def test_needs_enough_samples(self):
        with pytest.raises(TrainingError, match="at least"):
            train(linear_samples(50), TrainingConfig(min_samples=100))

    def test_invalid_config(self):
        with pytest.raises(ConfigurationError, match="optimizer"):
            TrainingConfig(optimizer="lbfgs")

    def test_fits_a_smooth_response_reproducibly(self):
        samples = linear_samples(800)
        hyper = TrainingConfig(epochs=60, batch_size=32, optimizer="adam", learning_rate=0.01,
                               min_samples=100, seed=4)
        model, report = train(samples, hyper, label="toy")
        again, _ = train(samples, hyper, label="toy")
        assert np.array_equal(model.w1, again.w1)
        assert report.n_train + report.n_val == 800
        assert 1 <= report.best_epoch <= report.epochs_run <= 60
        assert report.val_mae < 1.0
        assert "val_mae" in report.to_text()


class TestValidation:
    class Exact:
        """Returns the held-out targets, so every error is zero."""

        def __init__(self, samples):
            self.samples = samples

        def predict_batch(self, sign, t_in_prev, t_out_prev, t_out):
            return self.samples.t_in, self.samples.on_fraction

    def test_perfect_model_and_report_file(self, tmp_path):
        held = linear_samples(300, seed=1)
        model_path = tmp_path / "surrogate_x.json"
        report = validate(self.Exact(held), held, model_path=model_path)
        assert report.mae == 0.0
        assert report.on_fraction_mae == 0.0
        assert sum(b.n for b in report.bands) == 300
        assert ValidationReport.load(report_path(model_path)).n == 300

    def test_empty_heldout(self):
        with pytest.raises(ConfigurationError, match="empty"):
            validate(known_model(), TrainingSet.empty())

    def test_gate(self):
        report = ValidationReport(n=10, mae=0.08, max_error=0.2, on_fraction_mae=0.01, bands=[])
        ensure_gate(report, None)
        ensure_gate(report, 0.1)
        with pytest.raises(SurrogateGateError, match="exceeds the gate"):
            ensure_gate(report, 0.05)


class TestSurrogateInSolver:
    def test_transition_zeroes_off_fraction(self, winter_day):
        transition = SurrogateTransition(known_model(), winter_day)
        cells = np.linspace(15.0, 30.0, 7)
        off = transition(0, cells, None, Action.OFF)
        assert np.all(off.on_fraction == 0.0)
        assert off.t_indoor.shape == (7,)

    def test_rejects_envelope_space(self, winter_day):
        transition = SurrogateTransition(known_model(), winter_day)
        with pytest.raises(ConfigurationError, match="indoor state space"):
            transition(0, np.array([21.0]), np.array([21.0]), Action.HEAT)

    def test_gate_checked_on_construction(self, winter_day):
        bad = ValidationReport(n=10, mae=0.3, max_error=1.0, on_fraction_mae=0.1, bands=[])
        with pytest.raises(SurrogateGateError):
            SurrogateTransition(known_model(), winter_day, report=bad, gate_mae=0.05)

    def test_drift_report(self, building, winter_day):
        actions = [Action.HEAT] * 4 + [Action.OFF] * 4
        drift = closed_loop_drift(known_model(), building, winter_day.t_out[:9], actions,
                                  ThermalState(20.0, 20.0))
        assert drift.exact.shape == drift.predicted.shape == (9,)
        assert drift.deviation[0] == 0.0
        with pytest.raises(ConfigurationError, match="one more"):
            closed_loop_drift(known_model(), building, winter_day.t_out[:8], actions, ThermalState(20.0, 20.0))

    def test_benchmark(self, building):
        bench = benchmark_transition(known_model(), building, n_states=64, repeats=1)
        assert bench["states"] == 64
        assert bench["speedup"] > 0


@pytest.fixture(scope="module")
def plain_surrogate():
    """Surrogate of the PCM-free building trained on exact samples over a cool-season corpus."""
    building = reference_building()
    k = np.arange(48 * 40)
    corpus = 11.0 + 7.0 * np.sin(2 * np.pi * k / 48.0) + 2.0 * np.sin(2 * np.pi * k / (48.0 * 9))
    samples = generate_training_data(corpus, building, 20000, seed=1)
    heldout = generate_training_data(corpus, building, 4000, seed=2)
    config = TrainingConfig(hidden=32, epochs=400, optimizer="adam", learning_rate=0.005, patience=50)
    model, _ = train(samples, config)
    return building, model, validate(model, heldout)


@pytest.mark.slow
def test_trained_surrogate_meets_gate_on_plain_building(plain_surrogate):
    _, _, report = plain_surrogate
    ensure_gate(report, 0.05)
    assert report.mae <= 0.05


@pytest.mark.slow
def test_surrogate_policy_costs_within_five_percent_of_exact(plain_surrogate, winter_day):
    building, model, report = plain_surrogate
    initial = ThermalState(21.0, 21.0)
    grid = TemperatureGrid()
    tracker = deadband_tracker(building, winter_day, initial, DeadbandConfig())
    exact = MdpInstance(winter_day, building.hvac, ExactTransition(building, winter_day, tracker))
    learned = MdpInstance(winter_day, building.hvac, SurrogateTransition(model, winter_day, report, 0.05))

    exact_run = simulate_policy(madp_solve(exact, grid).policy, grid, initial, building, winter_day)
    learned_run = simulate_policy(madp_solve(learned, grid).policy, grid, initial, building, winter_day)
    assert learned_run.total_cost == pytest.approx(exact_run.total_cost, rel=0.05)


@pytest.mark.slow
def test_surrogate_is_fifty_times_faster_than_the_exact_step(plain_surrogate):
    _, model, _ = plain_surrogate
    bench = benchmark_transition(model, reference_building(reference_pcm(21.0)), n_states=1024, repeats=10)
    assert bench["speedup"] >= 50.0
