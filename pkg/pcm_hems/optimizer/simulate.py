from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from pcm_hems.errors import ConfigurationError
from pcm_hems.optimizer.mdp import ComfortPenalty, Policy, SlotData, energy_cost, grid_exchange
from pcm_hems.thermal.hvac import Action, electrical_energy_kwh
from pcm_hems.thermal.model import BuildingModel, ThermalState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolicyTrajectory:
    """Exact closed-loop run of a policy; boundary arrays have K+1 entries, slot arrays K."""

    t_indoor: np.ndarray
    t_envelope: np.ndarray
    actions: np.ndarray
    on_fraction: np.ndarray
    hvac_kwh: np.ndarray
    imported: np.ndarray
    exported: np.ndarray
    energy_cost: np.ndarray
    penalty: np.ndarray
    off_grid_lookups: int = 0

    @property
    def cost(self) -> np.ndarray:
        return self.energy_cost + self.penalty

    @property
    def total_cost(self) -> float:
        return float(np.sum(self.cost))

    @property
    def final_state(self) -> ThermalState:
        return ThermalState(float(self.t_envelope[-1]), float(self.t_indoor[-1]))

    def violations(self, comfort: tuple[float, float]) -> int:
        t = self.t_indoor[1:]
        return int(np.count_nonzero((t < comfort[0]) | (t > comfort[1])))


def simulate_policy(
    policy: Policy,
    space,
    initial: ThermalState,
    model: BuildingModel,
    slots: SlotData,
    comfort: tuple[float, float] = (20.0, 24.0),
    penalty: ComfortPenalty | None = None,
) -> PolicyTrajectory:
    """
    Forward-simulate a policy on the exact thermal model.

    Actions are looked up at the cell nearest to the simulated state; states off
    the grid use the nearest edge cell.
    """
    if policy.horizon != len(slots):
        raise ConfigurationError(f"policy horizon {policy.horizon} != data horizon {len(slots)}")
    penalty = penalty or ComfortPenalty()
    horizon = len(slots)
    t_in = np.empty(horizon + 1)
    t_e = np.empty(horizon + 1)
    actions = np.zeros(horizon, dtype=np.int8)
    frac = np.zeros(horizon)
    t_in[0], t_e[0] = initial.t_indoor, initial.t_envelope

    state = initial
    off_grid = 0
    for k in range(horizon):
        cell, clamped = space.locate(np.asarray(state.t_envelope), np.asarray(state.t_indoor))
        if bool(clamped):
            off_grid += 1
            logger.warning(
                "[optimizer] state T_in=%.2f T_e=%.2f outside the grid at slot %d; nearest cell used",
                state.t_indoor, state.t_envelope, k,
            )
        action = policy.action(k, int(cell))
        state, f = model.slot_state(state, action, slots.t_out[k], slots.t_out_end(k))
        actions[k] = int(action)
        frac[k] = 0.0 if action is Action.OFF else f
        t_in[k + 1], t_e[k + 1] = state.t_indoor, state.t_envelope

    hvac_kwh = electrical_energy_kwh(frac, model.hvac, model.slot_seconds)
    imported, exported = grid_exchange(slots.demand, slots.pv, hvac_kwh)
    return PolicyTrajectory(
        t_indoor=t_in,
        t_envelope=t_e,
        actions=actions,
        on_fraction=frac,
        hvac_kwh=hvac_kwh,
        imported=imported,
        exported=exported,
        energy_cost=energy_cost(imported, exported, slots.price, slots.feed_in),
        penalty=penalty(t_in[1:], comfort),
        off_grid_lookups=off_grid,
    )
