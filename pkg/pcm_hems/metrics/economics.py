from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from pcm_hems.data.tariff import TariffSchedule, label_series
from pcm_hems.errors import ConfigurationError, UndefinedMetricError

logger = logging.getLogger(__name__)


def self_consumption(demand, pv) -> float:
    """Percent of PV generation consumed on site: 100 * sum(min(p+, p-)) / sum(p-)."""
    p_plus = np.asarray(demand, dtype=float)
    p_minus = np.asarray(pv, dtype=float)
    if p_plus.shape != p_minus.shape:
        raise ConfigurationError(f"demand and pv lengths differ: {p_plus.shape} vs {p_minus.shape}")
    total = p_minus.sum()
    if not total > 0:
        raise UndefinedMetricError("self-consumption is undefined without PV generation")
    return float(100.0 * np.minimum(p_plus, p_minus).sum() / total)


def annual_cost(imported, exported, price, feed_in: float) -> float:
    """Sum over slots of ToU price x import minus feed-in x export, in $."""
    imported, exported = np.asarray(imported, dtype=float), np.asarray(exported, dtype=float)
    price = np.broadcast_to(np.asarray(price, dtype=float), imported.shape)
    return float(np.sum(price * imported - feed_in * exported))


def cost_by_window(imported, exported, price, feed_in: float, index,
                   schedule: TariffSchedule) -> dict[str, float]:
    """annual_cost split by tariff window label; the subtotals add up to the total."""
    labels = label_series(schedule, index)
    imported, exported = np.asarray(imported, dtype=float), np.asarray(exported, dtype=float)
    price = np.broadcast_to(np.asarray(price, dtype=float), imported.shape)
    slot_cost = price * imported - feed_in * exported
    return {label: float(slot_cost[labels == label].sum()) for label in schedule.labels}


@dataclass(frozen=True)
class CostSaving:
    absolute: float
    percent: float


def cost_saving(base: float, variant: float) -> CostSaving:
    absolute = base - variant
    if base <= 0:
        logger.warning("[metrics] base cost %.2f $ is not positive; percentage saving undefined", base)
        return CostSaving(absolute, math.nan)
    return CostSaving(absolute, 100.0 * absolute / base)


@dataclass(frozen=True)
class ScenarioResult:
    """Per-slot flows (kWh/slot) of one site under one scenario plus their totals."""

    site: str
    scenario: str
    imported: np.ndarray
    exported: np.ndarray
    pv: np.ndarray
    demand: np.ndarray        # household demand without HVAC
    hvac_kwh: np.ndarray
    t_indoor: np.ndarray      # at the end of each slot
    price: np.ndarray
    feed_in: float
    hvac_transitions: int = 0
    comfort_violations: int = 0

    def __post_init__(self):
        n = len(self.imported)
        for name in ("exported", "pv", "demand", "hvac_kwh", "t_indoor", "price"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(f"scenario result series '{name}' has the wrong length")

    @property
    def slots(self) -> int:
        return len(self.imported)

    @property
    def cost(self) -> float:
        return annual_cost(self.imported, self.exported, self.price, self.feed_in)

    @property
    def hvac_total(self) -> float:
        return float(np.sum(self.hvac_kwh))

    @property
    def total_demand(self) -> np.ndarray:
        return np.asarray(self.demand) + np.asarray(self.hvac_kwh)

    @property
    def sc(self) -> float:
        """Self-consumption in percent, NaN without PV."""
        try:
            return self_consumption(self.total_demand, self.pv)
        except UndefinedMetricError:
            return math.nan

    def totals(self) -> dict:
        return {
            "site": self.site,
            "scenario": self.scenario,
            "slots": self.slots,
            "cost": self.cost,
            "hvac_kwh": self.hvac_total,
            "demand_kwh": float(np.sum(self.demand)),
            "pv_kwh": float(np.sum(self.pv)),
            "import_kwh": float(np.sum(self.imported)),
            "export_kwh": float(np.sum(self.exported)),
            "sc": self.sc,
            "hvac_transitions": self.hvac_transitions,
            "comfort_violations": self.comfort_violations,
        }
