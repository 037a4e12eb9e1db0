"""
Offline training of the transition surrogate on exact-model trajectories.
"""

from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch
import torch.nn as nn
import torch.optim as optim
from torch.utils.data import DataLoader, TensorDataset

from pcm_hems.errors import ConfigurationError, SurrogateGateError, TrainingError
from pcm_hems.surrogate.network import Normalization, SurrogateModel, TransitionNet, report_path
from pcm_hems.thermal.hvac import Action
from pcm_hems.thermal.model import BuildingModel, ThermalState

logger = logging.getLogger(__name__)

ActionSampler = Callable[[np.random.Generator, np.ndarray | None, int], np.ndarray]


@dataclass(frozen=True)
class TrainingSample:
    action: Action
    t_in_prev: float
    t_out_prev: float
    t_out: float
    t_in: float
    on_fraction: float = 0.0


@dataclass(frozen=True)
class TrainingSet:
    """Columnar samples; t_envelope_prev is kept for auditing, the network never sees it."""

    action: np.ndarray  # Action codes
    t_in_prev: np.ndarray
    t_out_prev: np.ndarray
    t_out: np.ndarray
    t_in: np.ndarray
    on_fraction: np.ndarray
    t_envelope_prev: np.ndarray

    @classmethod
    def empty(cls) -> "TrainingSet":
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=np.int8), z, z, z, z, z, z)

    @classmethod
    def concat(cls, parts: list["TrainingSet"]) -> "TrainingSet":
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.__dataclass_fields__))

    def __len__(self) -> int:
        return len(self.t_in)

    def row(self, i: int) -> TrainingSample:
        return TrainingSample(
            Action(int(self.action[i])), float(self.t_in_prev[i]), float(self.t_out_prev[i]),
            float(self.t_out[i]), float(self.t_in[i]), float(self.on_fraction[i]),
        )

    def subset(self, idx) -> "TrainingSet":
        return TrainingSet(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))

    def action_sign(self) -> np.ndarray:
        return np.select([self.action == Action.HEAT, self.action == Action.COOL], [1.0, -1.0], 0.0)

    def inputs(self) -> np.ndarray:
        return np.column_stack([self.action_sign(), self.t_in_prev, self.t_out_prev, self.t_out])

    def targets(self) -> np.ndarray:
        return np.column_stack([self.t_in, self.on_fraction])

    def coverage(self, t_range: tuple[float, float] = (15.0, 30.0)) -> list[tuple[float, float, int]]:
        edges = np.arange(t_range[0], t_range[1] + 1.0, 1.0)
        counts, _ = np.histogram(self.t_in_prev, bins=edges)
        return [(float(lo), float(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)]


def sticky_action_sampler(allowed=tuple(Action), persistence: float = 0.7) -> ActionSampler:
    """Random actions that repeat the previous one with the given probability."""
    codes = np.asarray([int(a) for a in allowed], dtype=np.int8)

    def sample(rng: np.random.Generator, previous: np.ndarray | None, n: int) -> np.ndarray:
        fresh = rng.choice(codes, size=n)
        if previous is None:
            return fresh
        keep = rng.random(n) < persistence
        return np.where(keep, previous, fresh).astype(np.int8)

    return sample


def generate_training_data(
    t_out_corpus,
    model: BuildingModel,
    n: int,
    seed: int = 2019,
    sampler: ActionSampler | None = None,
    episode_slots: int = 48,
    burn_in: int = 2,
    t_range: tuple[float, float] = (15.0, 30.0),
    batch_episodes: int = 256,
) -> TrainingSet:
    """
    Run batches of random-action episodes through the exact model.

    Each episode starts at a random offset in the outdoor-temperature corpus
    (slot boundary values) with T_in drawn uniformly over t_range and T_e close
    to it. The first burn_in slots settle the envelope and are not recorded.
    Episodes whose air temperature leaves t_range by more than 2 K restart
    from a fresh random state.
    """
    if n < 0:
        raise ConfigurationError(f"sample count must be >= 0, got {n}")
    if n == 0:
        return TrainingSet.empty()
    corpus = np.asarray(t_out_corpus, dtype=float)
    if corpus.ndim != 1 or len(corpus) < episode_slots + burn_in + 1:
        raise ConfigurationError(
            f"weather corpus needs at least {episode_slots + burn_in + 1} boundary values, got {len(corpus)}"
        )
    if not np.all(np.isfinite(corpus)):
        raise ConfigurationError("weather corpus contains non-finite values")

    rng = np.random.default_rng(seed)
    allowed = model.hvac.allowed_actions()
    sampler = sampler or sticky_action_sampler(allowed)
    lo, hi = t_range
    steps = episode_slots + burn_in
    parts: list[TrainingSet] = []
    total = 0

    def fresh_states(m):
        ti = rng.uniform(lo, hi, m)
        te = np.clip(ti + rng.normal(0.0, 0.5, m), lo, hi)
        return te, ti

    while total < n:
        b = batch_episodes
        offsets = rng.integers(0, len(corpus) - steps, b)
        te, ti = fresh_states(b)
        prev = None
        for j in range(steps):
            t_start = corpus[offsets + j]
            t_end = corpus[offsets + j + 1]
            codes = sampler(rng, prev, b)
            codes = np.where(np.isin(codes, [int(a) for a in allowed]), codes, int(Action.OFF)).astype(np.int8)
            te_next, ti_next, frac = np.empty(b), np.empty(b), np.zeros(b)
            for action in allowed:
                mask = codes == int(action)
                if not np.any(mask):
                    continue
                out = model.slot(te[mask], ti[mask], action, t_start[mask], t_end[mask])
                te_next[mask], ti_next[mask] = out.t_envelope, out.t_indoor
                if action is not Action.OFF:
                    frac[mask] = out.on_fraction
            if j >= burn_in:
                parts.append(TrainingSet(codes.copy(), ti.copy(), t_start.copy(), t_end.copy(),
                                         ti_next.copy(), frac, te.copy()))
                total += b
            te, ti, prev = te_next, ti_next, codes
            escaped = (ti < lo - 2.0) | (ti > hi + 2.0)
            if np.any(escaped):
                te[escaped], ti[escaped] = fresh_states(int(np.count_nonzero(escaped)))
            if total >= n:
                break

    samples = TrainingSet.concat(parts).subset(slice(0, n))
    cover = samples.coverage(t_range)
    logger.info("[surrogate] %d samples generated; coverage per 1 C band: %s",
                len(samples), " ".join(f"{int(a)}:{c}" for a, _, c in cover))
    empty = [f"[{a:g}, {b:g})" for a, b, c in cover if c == 0]
    if empty:
        logger.warning("[surrogate] no training samples in bands %s", ", ".join(empty))
    return samples


@dataclass(frozen=True)
class TrainingConfig:
    hidden: int = 16
    epochs: int = 300
    batch_size: int = 128
    learning_rate: float = 0.02
    momentum: float = 0.9
    optimizer: str = "sgd"
    validation_fraction: float = 0.2
    patience: int = 30
    seed: int = 2019
    min_samples: int = 1000

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigurationError(f"unknown optimizer '{self.optimizer}'")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigurationError("validation fraction must be in (0, 1)")
        if self.hidden < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("hidden, epochs and batch size must be positive")


@dataclass
class TrainingReport:
    label: str
    seed: int
    n_train: int
    n_val: int
    epochs_run: int
    best_epoch: int
    train_mae: float
    val_mae: float
    val_mae_on_fraction: float
    runtime_s: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        lines = [f"{k}: {v}" for k, v in self.to_dict().items() if k != "config"]
        lines += [f"config.{k}: {v}" for k, v in self.config.items()]
        return "\n".join(lines) + "\n"


def _mae(model: SurrogateModel, samples: TrainingSet) -> tuple[float, float]:
    y = model.forward_inputs(samples.inputs(), warn=False)
    return (float(np.mean(np.abs(y[:, 0] - samples.t_in))),
            float(np.mean(np.abs(np.clip(y[:, 1], 0, 1) - samples.on_fraction))))


def train(samples: TrainingSet, hyper: TrainingConfig | None = None,
          label: str = "") -> tuple[SurrogateModel, TrainingReport]:
    """Mini-batch MSE training with early stopping on validation MAE of T_in."""
    hyper = hyper or TrainingConfig()
    if len(samples) < hyper.min_samples:
        raise TrainingError(f"need at least {hyper.min_samples} samples, got {len(samples)}")
    started = time.perf_counter()
    torch.manual_seed(hyper.seed)
    rng = np.random.default_rng(hyper.seed)

    perm = rng.permutation(len(samples))
    n_val = max(1, int(round(hyper.validation_fraction * len(samples))))
    val_set, train_set = samples.subset(perm[:n_val]), samples.subset(perm[n_val:])

    x_tr, y_tr = train_set.inputs(), train_set.targets()
    norm = Normalization.fit(x_tr, y_tr)
    to_t = lambda a: torch.tensor(a, dtype=torch.float64)  # noqa: E731
    xt = to_t((x_tr - norm.x_mean) / norm.x_std)
    yt = to_t((y_tr - norm.y_mean) / norm.y_std)
    xv = to_t((val_set.inputs() - norm.x_mean) / norm.x_std)
    yv_t_in = val_set.t_in

    loader = DataLoader(TensorDataset(xt, yt), batch_size=hyper.batch_size, shuffle=True,
                        generator=torch.Generator().manual_seed(hyper.seed))
    net = TransitionNet(hidden=hyper.hidden).double()
    criterion = nn.MSELoss()
    if hyper.optimizer == "adam":
        optimizer = optim.Adam(net.parameters(), lr=hyper.learning_rate)
    else:
        optimizer = optim.SGD(net.parameters(), lr=hyper.learning_rate, momentum=hyper.momentum)
    scheduler = optim.lr_scheduler.ReduceLROnPlateau(optimizer, factor=0.5, patience=max(1, hyper.patience // 3))

    best_mae, best_epoch, best_state = float("inf"), 0, copy.deepcopy(net.state_dict())
    epoch = 0
    for epoch in range(1, hyper.epochs + 1):
        net.train()
        epoch_loss = 0.0
        for xb, yb in loader:
            optimizer.zero_grad()
            loss = criterion(net(xb), yb)
            if not torch.isfinite(loss):
                raise TrainingError("training loss diverged", epoch=epoch)
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item()

        net.eval()
        with torch.no_grad():
            pred = net(xv)[:, 0].numpy() * norm.y_std[0] + norm.y_mean[0]
        val_mae = float(np.mean(np.abs(pred - yv_t_in)))
        if not np.isfinite(val_mae):
            raise TrainingError("validation error is non-finite", epoch=epoch)
        scheduler.step(val_mae)
        if val_mae < best_mae:
            best_mae, best_epoch, best_state = val_mae, epoch, copy.deepcopy(net.state_dict())
        if epoch % 10 == 0 or epoch == 1:
            logger.info("[surrogate] epoch %d/%d loss=%.6f val_mae=%.4f C",
                        epoch, hyper.epochs, epoch_loss / len(loader), val_mae)
        if epoch - best_epoch >= hyper.patience:
            logger.info("[surrogate] early stop at epoch %d (best %d)", epoch, best_epoch)
            break

    net.load_state_dict(best_state)
    meta = {"seed": hyper.seed, "best_epoch": best_epoch, "n_train": len(train_set), "n_val": len(val_set)}
    model = SurrogateModel.from_network(net, norm, label, meta)
    train_mae, _ = _mae(model, train_set)
    val_mae, val_frac = _mae(model, val_set)
    report = TrainingReport(
        label=label, seed=hyper.seed, n_train=len(train_set), n_val=len(val_set),
        epochs_run=epoch, best_epoch=best_epoch, train_mae=train_mae, val_mae=val_mae,
        val_mae_on_fraction=val_frac, runtime_s=time.perf_counter() - started, config=asdict(hyper),
    )
    logger.info("[surrogate] trained '%s': train MAE %.4f C, validation MAE %.4f C",
                label, train_mae, val_mae)
    return model, report


@dataclass(frozen=True)
class BandError:
    lo: float
    hi: float
    n: int
    mae: float
    max_error: float


@dataclass(frozen=True)
class ValidationReport:
    n: int
    mae: float
    max_error: float
    on_fraction_mae: float
    bands: list[BandError]

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ValidationReport":
        doc = json.loads(Path(path).read_text())
        doc["bands"] = [BandError(**b) for b in doc["bands"]]
        return cls(**doc)


def validate(model, heldout: TrainingSet, t_range: tuple[float, float] = (15.0, 30.0),
             model_path: str | Path | None = None) -> ValidationReport:
    """Error of model.predict_batch against exact targets, overall and per 1 C band of T_in."""
    if len(heldout) == 0:
        raise ConfigurationError("held-out set is empty")
    t_next, frac = model.predict_batch(heldout.action_sign(), heldout.t_in_prev,
                                       heldout.t_out_prev, heldout.t_out)
    err = np.abs(np.asarray(t_next) - heldout.t_in)
    bands = []
    for lo, hi, count in heldout.coverage(t_range):
        mask = (heldout.t_in_prev >= lo) & (heldout.t_in_prev < hi)
        if hi == t_range[1]:
            mask |= heldout.t_in_prev == hi
        sel = err[mask]
        bands.append(BandError(lo, hi, int(sel.size),
                               float(sel.mean()) if sel.size else float("nan"),
                               float(sel.max()) if sel.size else float("nan")))
    report = ValidationReport(
        n=len(heldout), mae=float(err.mean()), max_error=float(err.max()),
        on_fraction_mae=float(np.mean(np.abs(np.asarray(frac) - heldout.on_fraction))),
        bands=bands,
    )
    if model_path is not None:
        report.save(report_path(model_path))
    logger.info("[surrogate] validation on %d samples: MAE %.4f C, max %.4f C",
                report.n, report.mae, report.max_error)
    return report


def ensure_gate(report: ValidationReport, gate_mae: float | None) -> None:
    if gate_mae is not None and report.mae > gate_mae:
        raise SurrogateGateError(
            f"surrogate validation MAE {report.mae:.4f} C exceeds the gate {gate_mae:.4f} C"
        )


@dataclass(frozen=True)
class DriftReport:
    exact: np.ndarray
    predicted: np.ndarray

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.predicted - self.exact)

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max()) if self.deviation.size else 0.0


def closed_loop_drift(model: SurrogateModel, building: BuildingModel, t_out_boundaries,
                      actions, initial: ThermalState) -> DriftReport:
    """Feed predictions back as T_in and compare with the exact trajectory under the same actions."""
    t_out = np.asarray(t_out_boundaries, dtype=float)
    actions = [Action.parse(a) for a in actions]
    if len(t_out) != len(actions) + 1:
        raise ConfigurationError("need one more outdoor boundary value than actions")
    exact = [initial.t_indoor]
    predicted = [initial.t_indoor]
    state = initial
    for k, a in enumerate(actions):
        state, _ = building.slot_state(state, a, t_out[k], t_out[k + 1])
        exact.append(state.t_indoor)
        predicted.append(model.predict_slot(a, predicted[-1], t_out[k], t_out[k + 1])[0])
    report = DriftReport(np.asarray(exact), np.asarray(predicted))
    logger.info("[surrogate] closed-loop drift over %d slots: max %.3f C", len(actions), report.max_deviation)
    return report


def benchmark_transition(model: SurrogateModel, building: BuildingModel, n_states: int = 1024,
                         t_range: tuple[float, float] = (15.0, 30.0), t_out: tuple[float, float] = (12.0, 13.0),
                         repeats: int = 5) -> dict:
    """Best-of-repeats wall time for one batched slot transition, exact RK4 vs surrogate."""
    t_in = np.linspace(t_range[0], t_range[1], n_states)
    exact_s = surrogate_s = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for a in building.hvac.allowed_actions():
            building.slot(t_in, t_in, a, t_out[0], t_out[1])
        exact_s = min(exact_s, time.perf_counter() - t0)
        t0 = time.perf_counter()
        for a in building.hvac.allowed_actions():
            model.predict_batch(np.full(n_states, float(a.sign)), t_in,
                                np.full(n_states, t_out[0]), np.full(n_states, t_out[1]))
        surrogate_s = min(surrogate_s, time.perf_counter() - t0)
    result = {
        "states": n_states, "exact_s": exact_s, "surrogate_s": surrogate_s,
        "speedup": exact_s / surrogate_s if surrogate_s > 0 else float("inf"),
    }
    logger.info("[surrogate] transition benchmark: exact %.2e s, surrogate %.2e s, speed-up %.0fx",
                exact_s, surrogate_s, result["speedup"])
    return result
