"""
First-order Markov chain over demand levels, conditioned on the slot of day.

Demand values are binned at quantiles of the empirical series. For each slot
of day s the chain holds a row-stochastic matrix P[s][i, j], the probability
that the slot after s is in bin j given slot s is in bin i.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from pcm_hems.data.series import TimeSeries
from pcm_hems.errors import ConfigurationError

logger = logging.getLogger(__name__)

SMOOTHING = 1e-6


@dataclass(frozen=True)
class DemandMarkovModel:
    edges: np.ndarray        # (bins + 1,) ascending quantile edges
    levels: np.ndarray       # (bins,) representative kWh/slot of each bin
    transitions: np.ndarray  # (slots_per_day, bins, bins)
    initial: np.ndarray      # (bins,) bin distribution at the first slot of the day
    slot_seconds: int = 1800

    def __post_init__(self):
        if self.transitions.shape != (self.slots_per_day, self.n_bins, self.n_bins):
            raise ConfigurationError(f"transition tensor has shape {self.transitions.shape}")
        if np.any(np.diff(self.levels) < 0):
            raise ConfigurationError("bin levels must be ordered")
        if not np.allclose(self.transitions.sum(axis=2), 1.0, atol=1e-9):
            raise ConfigurationError("transition rows must sum to 1")

    @property
    def n_bins(self) -> int:
        return len(self.levels)

    @property
    def slots_per_day(self) -> int:
        return 86400 // self.slot_seconds

    def to_dict(self) -> dict:
        return {
            "edges": self.edges.tolist(), "levels": self.levels.tolist(),
            "transitions": self.transitions.tolist(), "initial": self.initial.tolist(),
            "slot_seconds": self.slot_seconds,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DemandMarkovModel":
        return cls(np.asarray(doc["edges"]), np.asarray(doc["levels"]), np.asarray(doc["transitions"]),
                   np.asarray(doc["initial"]), int(doc["slot_seconds"]))


def fit_markov_chain(series: TimeSeries, bins: int = 10, smoothing: float = SMOOTHING) -> DemandMarkovModel:
    if bins < 1:
        raise ConfigurationError(f"bin count must be >= 1, got {bins}")
    if len(series) < 2:
        raise ConfigurationError("need at least two demand values to fit transitions")
    v = series.values
    per_day = series.slots_per_day
    if len(v) < bins * per_day * 10:
        logger.warning(
            "[data] demand series '%s' has %d slots, fewer than %d for %d bins; transitions will be sparse",
            series.name, len(v), bins * per_day * 10, bins,
        )

    edges = np.unique(np.quantile(v, np.linspace(0.0, 1.0, bins + 1)))
    if len(edges) < 2:
        logger.warning("[data] demand series '%s' is constant; fitting a single-bin model", series.name)
        edges = np.asarray([v[0], v[0]])
    elif len(edges) - 1 < bins:
        logger.info("[data] %d tied quantiles merged; %d bins kept", bins - (len(edges) - 1), len(edges) - 1)
    n_bins = len(edges) - 1

    state = np.searchsorted(edges[1:-1], v, side="right")
    levels = np.asarray([
        v[state == b].mean() if np.any(state == b) else 0.5 * (edges[b] + edges[b + 1])
        for b in range(n_bins)
    ])

    sod = series.slot_of_day()
    counts = np.zeros((per_day, n_bins, n_bins))
    np.add.at(counts, (sod[:-1], state[:-1], state[1:]), 1.0)
    counts += smoothing
    transitions = counts / counts.sum(axis=2, keepdims=True)

    first = state[sod == 0]
    initial = np.bincount(first, minlength=n_bins).astype(float) + smoothing
    initial /= initial.sum()

    model = DemandMarkovModel(edges, levels, transitions, initial, series.slot_seconds)
    logger.info("[data] fitted %d-bin demand chain on %d slots (levels %.3f..%.3f kWh/slot)",
                n_bins, len(v), levels[0], levels[-1])
    return model


def sample_profiles(model: DemandMarkovModel, days: int, n_profiles: int, seed: int) -> np.ndarray:
    """(n_profiles, days * slots_per_day) array of sampled kWh/slot values, starting at midnight."""
    if days < 0 or n_profiles < 0:
        raise ConfigurationError("days and profile count must be >= 0")
    rng = np.random.default_rng(seed)
    per_day = model.slots_per_day
    n = days * per_day
    out = np.empty((n_profiles, n))
    if n == 0 or n_profiles == 0:
        return out
    cum = np.cumsum(model.transitions, axis=2)
    cum[:, :, -1] = 1.0
    init_cum = np.cumsum(model.initial)
    init_cum[-1] = 1.0
    state = np.searchsorted(init_cum, rng.random(n_profiles), side="right")
    for k in range(n):
        out[:, k] = model.levels[state]
        row = cum[k % per_day][state]
        state = (rng.random(n_profiles)[:, None] >= row).sum(axis=1)
        state = np.minimum(state, model.n_bins - 1)
    return out


def sample_profile(model: DemandMarkovModel, days: int, seed: int,
                   start: str | pd.Timestamp = "2019-01-01", name: str = "demand") -> TimeSeries:
    start = pd.Timestamp(start).normalize()
    values = sample_profiles(model, days, 1, seed)[0]
    return TimeSeries(start, model.slot_seconds, values, "kWh/slot", name)


def calibrate_profile(series: TimeSeries, annual_kwh: float = 4700.0) -> TimeSeries:
    """Scale a profile so its annualised total equals annual_kwh."""
    total = series.total()
    if not total > 0:
        raise ConfigurationError("cannot calibrate a profile with zero total demand")
    years = len(series) * series.slot_seconds / (365.0 * 86400)
    factor = annual_kwh * years / total
    logger.info("[data] demand calibrated by x%.4f to %.0f kWh/year", factor, annual_kwh)
    return series.scaled(factor)
