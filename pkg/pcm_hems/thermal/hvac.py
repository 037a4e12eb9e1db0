"""
On/off heat pump with a fixed COP.

A slot's action is held for the whole slot at constant power: +rating*COP
while heating, -rating*COP while cooling. A unit built with supply_limit=True
instead throttles linearly as the indoor air approaches its high (low) limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from pcm_hems.errors import ConfigurationError


class Action(IntEnum):
    # Order is the tie-break preference of the optimizer.
    OFF = 0
    HEAT = 1
    COOL = 2

    @property
    def sign(self) -> int:
        return {Action.OFF: 0, Action.HEAT: 1, Action.COOL: -1}[self]

    @classmethod
    def parse(cls, value: "str | int | Action") -> "Action":
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(int(value))


ACTIONS: tuple[Action, ...] = (Action.OFF, Action.HEAT, Action.COOL)


@dataclass(frozen=True)
class HvacSpec:
    electrical_rating: float        # kW
    cop: float
    modes: frozenset = frozenset({"heat", "cool"})
    heat_limit: float = 24.0        # C, indoor air high limit while heating
    cool_limit: float = 20.0        # C, indoor air low limit while cooling
    limiter_band: float = 4.0       # K, throttling width below/above the limits
    supply_limit: bool = False      # throttle with SupplyLimiter instead of running flat out

    def __post_init__(self):
        if not self.electrical_rating > 0:
            raise ConfigurationError("HVAC rating must be > 0")
        if not self.cop > 1:
            raise ConfigurationError("HVAC COP must be > 1")
        if not self.modes or not set(self.modes) <= {"heat", "cool"}:
            raise ConfigurationError(f"unsupported HVAC modes {sorted(self.modes)}")
        if not self.limiter_band > 0:
            raise ConfigurationError("limiter band must be > 0")

    @property
    def thermal_rating_w(self) -> float:
        return self.electrical_rating * 1000.0 * self.cop

    def supports(self, action: Action) -> bool:
        if action is Action.OFF:
            return True
        return ("heat" if action is Action.HEAT else "cool") in self.modes

    def allowed_actions(self) -> tuple[Action, ...]:
        return tuple(a for a in ACTIONS if self.supports(a))


def hvac_thermal_power(on: bool, mode: str, hvac: HvacSpec) -> float:
    """Nominal thermal power in W: +rating*COP heating, -rating*COP cooling."""
    if mode not in ("heat", "cool"):
        raise ConfigurationError(f"unknown HVAC mode '{mode}'")
    if mode not in hvac.modes:
        raise ConfigurationError(f"HVAC does not support '{mode}'")
    if not on:
        return 0.0
    return hvac.thermal_rating_w if mode == "heat" else -hvac.thermal_rating_w


class SupplyLimiter:
    """
    Delivered thermal power as a function of indoor temperature for one action.

    Used as the q_hvac argument of the thermal step.
    """

    def __init__(self, hvac: HvacSpec, action: Action):
        if not hvac.supports(action):
            raise ConfigurationError(f"HVAC does not support action {action.name}")
        self.action = action
        self.power = hvac.thermal_rating_w
        self.heat_limit = hvac.heat_limit
        self.cool_limit = hvac.cool_limit
        self.band = hvac.limiter_band

    def __call__(self, t_in):
        if self.action is Action.OFF:
            return np.zeros_like(t_in)
        if self.action is Action.HEAT:
            return self.power * np.clip((self.heat_limit - t_in) / self.band, 0.0, 1.0)
        return -self.power * np.clip((t_in - self.cool_limit) / self.band, 0.0, 1.0)


def slot_supply(hvac: HvacSpec, action: Action):
    """q_hvac for a slot held at `action`: a constant in W, or a SupplyLimiter when opted in."""
    if hvac.supply_limit:
        return SupplyLimiter(hvac, action)
    if action is Action.OFF:
        return 0.0
    return hvac_thermal_power(True, "heat" if action is Action.HEAT else "cool", hvac)


def electrical_energy_kwh(on_fraction, hvac: HvacSpec, slot_seconds: float):
    """Rating x on-fraction x slot length, in kWh."""
    return hvac.electrical_rating * np.asarray(on_fraction) * slot_seconds / 3600.0


REFERENCE_HVAC = HvacSpec(electrical_rating=4.0, cop=4.5)
