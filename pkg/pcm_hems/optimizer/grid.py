"""
Discretised state spaces for the HEMS MDP.

TemperatureGrid is the indoor-temperature-only space. EnvelopeGrid is the
(T_e, T_in) product space used for sensitivity checks of the one-state
approximation. Both expose the same small interface to the solver: cell
coordinates and a rounding lookup that reports clamped entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pcm_hems.errors import ConfigurationError


@dataclass(frozen=True)
class TemperatureGrid:
    min: float = 15.0
    max: float = 30.0
    resolution: float = 0.1

    def __post_init__(self):
        if not self.min < self.max:
            raise ConfigurationError(f"grid min {self.min} must be below max {self.max}")
        if not self.resolution > 0:
            raise ConfigurationError("grid resolution must be > 0")
        span = (self.max - self.min) / self.resolution
        if abs(span - round(span)) > 1e-6:
            raise ConfigurationError("grid span must be a whole number of resolution steps")

    @property
    def size(self) -> int:
        return int(round((self.max - self.min) / self.resolution)) + 1

    @property
    def values(self) -> np.ndarray:
        return self.min + self.resolution * np.arange(self.size)

    def covers(self, lo: float, hi: float) -> bool:
        return self.min <= lo and hi <= self.max

    def round_index(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Nearest cell of each temperature, clamped; second value flags clamped entries."""
        raw = np.rint((np.asarray(t, dtype=float) - self.min) / self.resolution)
        clamped = (raw < 0) | (raw > self.size - 1) | ~np.isfinite(raw)
        idx = np.clip(np.nan_to_num(raw, nan=0.0), 0, self.size - 1).astype(np.int64)
        return idx, clamped

    # -- state space interface -------------------------------------------------
    @property
    def n_cells(self) -> int:
        return self.size

    @property
    def two_dimensional(self) -> bool:
        return False

    def cell_t_indoor(self) -> np.ndarray:
        return self.values

    def cell_t_envelope(self) -> np.ndarray | None:
        return None

    def locate(self, t_envelope, t_indoor) -> tuple[np.ndarray, np.ndarray]:
        return self.round_index(t_indoor)

    def describe(self) -> dict:
        return {"kind": "indoor", "min": self.min, "max": self.max,
                "resolution": self.resolution, "cells": self.n_cells}


@dataclass(frozen=True)
class EnvelopeGrid:
    indoor: TemperatureGrid
    envelope: TemperatureGrid

    @property
    def n_cells(self) -> int:
        return self.indoor.size * self.envelope.size

    @property
    def two_dimensional(self) -> bool:
        return True

    def covers(self, lo: float, hi: float) -> bool:
        return self.indoor.covers(lo, hi)

    def cell_t_indoor(self) -> np.ndarray:
        return np.tile(self.indoor.values, self.envelope.size)

    def cell_t_envelope(self) -> np.ndarray:
        return np.repeat(self.envelope.values, self.indoor.size)

    def locate(self, t_envelope, t_indoor) -> tuple[np.ndarray, np.ndarray]:
        i_in, c_in = self.indoor.round_index(t_indoor)
        i_e, c_e = self.envelope.round_index(t_envelope)
        return i_e * self.indoor.size + i_in, c_in | c_e

    def describe(self) -> dict:
        return {"kind": "envelope", "cells": self.n_cells,
                "indoor": self.indoor.describe(), "envelope": self.envelope.describe()}


def grid_from_settings(t_min: float, t_max: float, resolution: float, comfort: tuple[float, float],
                       envelope: tuple[float, float, float] | None = None):
    indoor = TemperatureGrid(t_min, t_max, resolution)
    if not indoor.covers(*comfort):
        raise ConfigurationError(
            f"grid [{t_min}, {t_max}] does not cover the comfort band {comfort}"
        )
    if envelope is None:
        return indoor
    e_min, e_max, e_res = envelope
    if not math.isfinite(e_res) or e_res <= 0:
        raise ConfigurationError("envelope grid resolution must be > 0")
    return EnvelopeGrid(indoor, TemperatureGrid(e_min, e_max, e_res))
