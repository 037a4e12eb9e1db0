from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from pcm_hems.errors import UndefinedMetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    se: float
    std: float
    n: int
    insufficient: bool = False  # n == 1: std and se reported as 0
    missing: int = 0

    def to_dict(self, prefix: str = "") -> dict:
        return {f"{prefix}mean": self.mean, f"{prefix}se": self.se, f"{prefix}std": self.std,
                f"{prefix}n": self.n, f"{prefix}insufficient": self.insufficient,
                f"{prefix}missing": self.missing}


def summarize(values) -> SummaryStats:
    """Sample mean, sample standard deviation (n - 1) and standard error; NaN entries count as missing."""
    v = np.asarray(list(values), dtype=float)
    finite = v[np.isfinite(v)]
    missing = int(v.size - finite.size)
    n = int(finite.size)
    if n == 0:
        raise UndefinedMetricError("no values to summarize")
    mean = float(finite.mean())
    if n == 1:
        return SummaryStats(mean, 0.0, 0.0, 1, insufficient=True, missing=missing)
    std = float(finite.std(ddof=1))
    return SummaryStats(mean, std / math.sqrt(n), std, n, missing=missing)


def histogram(values, bins: int = 10) -> list[dict]:
    """Counts over equal-width bins of the finite values."""
    v = np.asarray(list(values), dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return []
    counts, edges = np.histogram(v, bins=bins)
    return [{"lo": float(a), "hi": float(b), "count": int(c)}
            for a, b, c in zip(edges[:-1], edges[1:], counts)]
