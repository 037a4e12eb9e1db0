"""
Half-hourly time series on disk.

One series per file: a two-column CSV whose header is `timestamp,<units>` with
units one of degC, kW, kWh/slot. Timestamps are ISO-8601 local wall time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from pcm_hems.errors import ConfigurationError, LoadError, SelectionError

logger = logging.getLogger(__name__)

UNITS = ("degC", "kW", "kWh/slot")
_ALIASES = {"°C": "degC", "C": "degC", "degc": "degC"}
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"


def canonical_units(tag: str) -> str:
    tag = _ALIASES.get(tag.strip(), tag.strip())
    if tag not in UNITS:
        raise ConfigurationError(f"unknown units tag '{tag}', expected one of {UNITS}")
    return tag


@dataclass(frozen=True)
class TimeSeries:
    start: pd.Timestamp
    slot_seconds: int
    values: np.ndarray
    units: str
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start", pd.Timestamp(self.start))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "units", canonical_units(self.units))
        if self.slot_seconds <= 0:
            raise ConfigurationError("slot length must be > 0")
        if self.values.ndim != 1:
            raise ConfigurationError("series values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError(f"series '{self.name}' has non-finite values")
        if self.units != "degC" and np.any(self.values < 0):
            raise ConfigurationError(f"series '{self.name}' has negative {self.units} values")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def slots_per_day(self) -> int:
        return 86400 // self.slot_seconds

    @property
    def index(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=len(self), freq=pd.Timedelta(seconds=self.slot_seconds))

    @property
    def end(self) -> pd.Timestamp:
        """Start of the slot after the last one."""
        return self.start + pd.Timedelta(seconds=self.slot_seconds * len(self))

    def slot_of_day(self) -> np.ndarray:
        first = (self.start - self.start.normalize()).total_seconds() // self.slot_seconds
        return (int(first) + np.arange(len(self))) % self.slots_per_day

    def summary(self) -> dict:
        if not len(self):
            return {"n": 0, "min": float("nan"), "max": float("nan"), "mean": float("nan")}
        v = self.values
        return {"n": len(v), "min": float(v.min()), "max": float(v.max()), "mean": float(v.mean())}

    def total(self) -> float:
        return float(self.values.sum())

    def scaled(self, factor: float, name: str | None = None) -> "TimeSeries":
        if not factor > 0:
            raise ConfigurationError(f"scaling factor must be > 0, got {factor}")
        return TimeSeries(self.start, self.slot_seconds, self.values * factor, self.units,
                          self.name if name is None else name)

    def window(self, start, periods: int) -> "TimeSeries":
        """`periods` slots beginning at timestamp `start`."""
        start = pd.Timestamp(start)
        offset = (start - self.start).total_seconds() / self.slot_seconds
        if offset != int(offset) or offset < 0 or int(offset) + periods > len(self):
            raise SelectionError(
                f"window {start} + {periods} slots is not covered by '{self.name}' "
                f"({self.start} .. {self.end})"
            )
        i = int(offset)
        return TimeSeries(start, self.slot_seconds, self.values[i:i + periods], self.units, self.name)

    def slice(self, i: int, j: int) -> "TimeSeries":
        start = self.start + pd.Timedelta(seconds=self.slot_seconds * i)
        return TimeSeries(start, self.slot_seconds, self.values[i:j], self.units, self.name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"timestamp": self.index, self.units: self.values})


def load_series(path: str | Path, units: str, slot_seconds: int = 1800,
                name: str | None = None) -> TimeSeries:
    """
    Read and validate one series file.

    LoadError rows are 1-based data rows (the header is not counted).
    """
    path = Path(path)
    expected = canonical_units(units)
    try:
        df = pd.read_csv(path)
    except FileNotFoundError as e:
        raise LoadError(f"series file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise LoadError(f"cannot parse {path}: {e}") from e

    if df.shape[1] != 2 or df.columns[0].strip() != "timestamp":
        raise LoadError(f"{path}: expected header 'timestamp,<units>', got {list(df.columns)}")
    try:
        tag = canonical_units(str(df.columns[1]))
    except ConfigurationError as e:
        raise LoadError(f"{path}: {e}") from e
    if tag != expected:
        raise LoadError(f"{path}: units tag '{tag}' does not match expected '{expected}'")
    if df.empty:
        raise LoadError(f"{path}: no data rows")

    try:
        ts = pd.to_datetime(df.iloc[:, 0], format="ISO8601")
    except (ValueError, TypeError) as e:
        raise LoadError(f"{path}: unparseable timestamp: {e}") from e
    if getattr(ts.dt, "tz", None) is not None:
        ts = ts.dt.tz_localize(None)
    values = pd.to_numeric(df.iloc[:, 1], errors="coerce").to_numpy(dtype=float)

    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise LoadError(f"{path}: non-finite value at {ts.iloc[bad[0]]}", row=int(bad[0]) + 1)
    if tag != "degC":
        neg = np.flatnonzero(values < 0)
        if neg.size:
            raise LoadError(f"{path}: negative {tag} value at {ts.iloc[neg[0]]}", row=int(neg[0]) + 1)

    step = ts.diff().dt.total_seconds().to_numpy()
    for i in range(1, len(ts)):
        if step[i] == slot_seconds:
            continue
        prev = ts.iloc[i - 1]
        if step[i] == 0:
            raise LoadError(f"{path}: duplicate timestamp {ts.iloc[i]}", row=i + 1)
        if step[i] > slot_seconds:
            missing = prev + pd.Timedelta(seconds=slot_seconds)
            raise LoadError(f"{path}: missing slot {missing} (gap before {ts.iloc[i]})", row=i + 1)
        raise LoadError(f"{path}: irregular spacing at {ts.iloc[i]} ({step[i]:g} s)", row=i + 1)

    series = TimeSeries(ts.iloc[0], slot_seconds, values, tag, name or path.stem)
    s = series.summary()
    logger.info("[data] %s: %d slots from %s, min %.2f max %.2f mean %.2f %s",
                series.name, s["n"], series.start, s["min"], s["max"], s["mean"], tag)
    return series


def save_series(series: TimeSeries, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({
        "timestamp": series.index.strftime(TIMESTAMP_FORMAT),
        series.units: series.values,
    })
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path
