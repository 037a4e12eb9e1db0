"""
Deadband (hysteresis) thermostat used by the DB and DB-PCM baselines.

The controller samples T_in once per slot boundary and holds its action for the
slot, the same decision granularity the HEMS gets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from pcm_hems.errors import ConfigurationError
from pcm_hems.thermal.hvac import Action, electrical_energy_kwh
from pcm_hems.thermal.model import BuildingModel, ThermalState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeadbandConfig:
    heat_setpoint: float = 21.0
    cool_setpoint: float = 23.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ConfigurationError("deadband width must be > 0")
        if self.heat_setpoint + self.width > self.cool_setpoint - self.width:
            raise ConfigurationError(
                f"heating band ends at {self.heat_setpoint + self.width} C, above the "
                f"cooling band start {self.cool_setpoint - self.width} C"
            )

    @property
    def heat_on(self) -> float:
        return self.heat_setpoint - self.width

    @property
    def heat_off(self) -> float:
        return self.heat_setpoint + self.width

    @property
    def cool_on(self) -> float:
        return self.cool_setpoint + self.width

    @property
    def cool_off(self) -> float:
        return self.cool_setpoint - self.width


@dataclass(frozen=True)
class ControllerState:
    action: Action = Action.OFF


def deadband_decide(t_in: float, prev: ControllerState, cfg: DeadbandConfig) -> ControllerState:
    if prev.action is Action.HEAT:
        return ControllerState(Action.OFF) if t_in > cfg.heat_off else prev
    if prev.action is Action.COOL:
        return ControllerState(Action.OFF) if t_in < cfg.cool_off else prev
    if t_in < cfg.heat_on:
        return ControllerState(Action.HEAT)
    if t_in > cfg.cool_on:
        return ControllerState(Action.COOL)
    return prev


@dataclass
class ControlTrajectory:
    """Per-slot record of a controller run; index k is the slot starting at boundary k."""

    actions: list[Action] = field(default_factory=list)
    t_indoor: list[float] = field(default_factory=list)    # at slot start
    t_envelope: list[float] = field(default_factory=list)  # at slot start
    on_fraction: list[float] = field(default_factory=list)
    hvac_kwh: list[float] = field(default_factory=list)
    final_state: ThermalState | None = None

    def transitions(self) -> int:
        """Number of on/off switching events."""
        return sum(1 for a, b in zip(self.actions, self.actions[1:]) if a is not b)

    def overshoot(self, cfg: DeadbandConfig) -> float:
        """Largest excursion of the sampled T_in beyond the outer thresholds, in K."""
        t = np.asarray(self.t_indoor + ([self.final_state.t_indoor] if self.final_state else []))
        if t.size == 0:
            return 0.0
        below = np.max(cfg.heat_on - t, initial=0.0)
        above = np.max(t - cfg.cool_on, initial=0.0)
        return float(max(below, above, 0.0))


def simulate_deadband(
    initial: ThermalState,
    t_out: np.ndarray,
    cfg: DeadbandConfig,
    model: BuildingModel,
    t_out_final: float | None = None,
    start_action: ControllerState = ControllerState(),
) -> ControlTrajectory:
    """
    Run the thermostat over len(t_out) slots.

    t_out[k] is the outdoor temperature at slot boundary k; the slot is integrated
    with t_out interpolated up to boundary k+1 (t_out_final for the last slot,
    held flat when not given). The PCM, if any, comes from the model.
    """
    t_out = np.asarray(t_out, dtype=float)
    traj = ControlTrajectory()
    state = initial
    ctrl = start_action
    n = len(t_out)
    for k in range(n):
        ctrl = deadband_decide(state.t_indoor, ctrl, cfg)
        if not model.hvac.supports(ctrl.action):
            ctrl = ControllerState(Action.OFF)
        end = t_out[k + 1] if k + 1 < n else (t_out[k] if t_out_final is None else t_out_final)
        traj.actions.append(ctrl.action)
        traj.t_indoor.append(state.t_indoor)
        traj.t_envelope.append(state.t_envelope)
        state, frac = model.slot_state(state, ctrl.action, t_out[k], end)
        traj.on_fraction.append(frac)
        traj.hvac_kwh.append(float(electrical_energy_kwh(frac, model.hvac, model.slot_seconds)))
    traj.final_state = state
    logger.debug("[control] deadband run: %d slots, %d transitions", n, traj.transitions())
    return traj
