"""
Time-of-use import tariff with a flat feed-in credit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from pcm_hems.errors import ConfigurationError

MINUTES_PER_DAY = 24 * 60


def parse_clock(value: str) -> int:
    """'HH:MM' to minutes after midnight; '24:00' is allowed as an end time."""
    try:
        hh, mm = value.strip().split(":")
        minutes = int(hh) * 60 + int(mm)
    except (AttributeError, ValueError) as e:
        raise ConfigurationError(f"bad clock time '{value}', expected HH:MM") from e
    if not 0 <= minutes <= MINUTES_PER_DAY or not 0 <= int(mm) < 60:
        raise ConfigurationError(f"clock time '{value}' out of range")
    return minutes


def format_clock(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


@dataclass(frozen=True)
class TariffWindow:
    label: str
    start: int  # minutes after midnight, inclusive
    end: int    # exclusive; end <= start wraps past midnight
    price: float

    @classmethod
    def from_clock(cls, label: str, start: str, end: str, price: float) -> "TariffWindow":
        return cls(label, parse_clock(start) % MINUTES_PER_DAY, parse_clock(end) % MINUTES_PER_DAY, price)

    def minutes(self) -> np.ndarray:
        if self.end > self.start:
            return np.arange(self.start, self.end)
        return np.concatenate([np.arange(self.start, MINUTES_PER_DAY), np.arange(0, self.end)])


@dataclass(frozen=True)
class TariffSchedule:
    windows: tuple[TariffWindow, ...]
    feed_in: float

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        if not self.windows:
            raise ConfigurationError("tariff has no windows")
        if not self.feed_in > 0:
            raise ConfigurationError(f"feed-in price must be > 0, got {self.feed_in}")
        owner = np.full(MINUTES_PER_DAY, -1)
        for i, w in enumerate(self.windows):
            if not w.price > 0:
                raise ConfigurationError(f"window '{w.label}' price must be > 0")
            if not w.price > self.feed_in:
                raise ConfigurationError(
                    f"window '{w.label}' price {w.price} must exceed the feed-in price {self.feed_in}"
                )
            mins = w.minutes()
            clash = mins[owner[mins] >= 0]
            if clash.size:
                raise ConfigurationError(
                    f"window '{w.label}' overlaps '{self.windows[owner[clash[0]]].label}' "
                    f"at {format_clock(int(clash[0]))}"
                )
            owner[mins] = i
        gaps = np.flatnonzero(owner < 0)
        if gaps.size:
            raise ConfigurationError(f"tariff windows leave {format_clock(int(gaps[0]))} uncovered")
        object.__setattr__(self, "_owner", owner)

    def _minute(self, index) -> np.ndarray:
        idx = pd.DatetimeIndex(index)
        return (idx.hour * 60 + idx.minute).to_numpy()

    def window_at(self, timestamp) -> TariffWindow:
        ts = pd.Timestamp(timestamp)
        return self.windows[self._owner[ts.hour * 60 + ts.minute]]

    @property
    def labels(self) -> list[str]:
        return list(dict.fromkeys(w.label for w in self.windows))

    @classmethod
    def from_config(cls, windows: list[dict], feed_in: float) -> "TariffSchedule":
        return cls(tuple(TariffWindow.from_clock(w["label"], w["start"], w["end"], w["price"])
                         for w in windows), feed_in)


def tariff_price(schedule: TariffSchedule, timestamp) -> float:
    """Import price of the window containing the timestamp; a boundary belongs to the later window."""
    return schedule.window_at(timestamp).price


def window_label(schedule: TariffSchedule, timestamp) -> str:
    return schedule.window_at(timestamp).label


def window_boundaries(schedule: TariffSchedule) -> list[str]:
    """Clock times where the price changes, sorted."""
    prices = np.asarray([schedule.windows[i].price for i in schedule._owner])
    labels = [schedule.windows[i].label for i in schedule._owner]
    changes = [m for m in range(MINUTES_PER_DAY)
               if prices[m] != prices[m - 1] or labels[m] != labels[m - 1]]
    return [format_clock(m) for m in changes]


def price_series(schedule: TariffSchedule, index) -> np.ndarray:
    prices = np.asarray([w.price for w in schedule.windows])
    return prices[schedule._owner[schedule._minute(index)]]


def label_series(schedule: TariffSchedule, index) -> np.ndarray:
    labels = np.asarray([w.label for w in schedule.windows], dtype=object)
    return labels[schedule._owner[schedule._minute(index)]]


# Illustrative prices; the windows and the 0.09 $/kWh feed-in are the reference values.
DEFAULT_TARIFF = TariffSchedule(
    windows=(
        TariffWindow.from_clock("off-peak", "22:30", "07:30", 0.16),
        TariffWindow.from_clock("shoulder", "07:30", "14:30", 0.24),
        TariffWindow.from_clock("peak", "14:30", "20:30", 0.50),
        TariffWindow.from_clock("shoulder", "20:30", "22:30", 0.24),
    ),
    feed_in=0.09,
)
