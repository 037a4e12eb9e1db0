"""
Transition functions for the backward pass.

ExactTransition integrates the ODEs for every grid cell at once. In the
indoor-only state space it needs an envelope temperature per cell, which the
EnvelopeTracker supplies from a nominal trajectory. SurrogateTransition replaces
the integration with the trained network.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from pcm_hems.control.deadband import DeadbandConfig, simulate_deadband
from pcm_hems.errors import ConfigurationError
from pcm_hems.optimizer.mdp import SlotData
from pcm_hems.surrogate.training import ensure_gate
from pcm_hems.thermal.hvac import Action
from pcm_hems.thermal.model import BuildingModel, SlotOutcome, ThermalState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvelopeTracker:
    """
    T_e estimate for an indoor-temperature cell: nominal T_e shifted by the
    cell's deviation from the nominal T_in, scaled by the coupling factor.
    """

    t_envelope: np.ndarray  # nominal T_e at each slot start
    t_indoor: np.ndarray    # nominal T_in at each slot start
    coupling: float = 1.0

    def __call__(self, k: int, t_indoor: np.ndarray) -> np.ndarray:
        return self.t_envelope[k] + self.coupling * (np.asarray(t_indoor) - self.t_indoor[k])

    @classmethod
    def from_trajectory(cls, t_envelope, t_indoor, coupling: float = 1.0) -> "EnvelopeTracker":
        return cls(np.asarray(t_envelope, dtype=float), np.asarray(t_indoor, dtype=float), coupling)


def deadband_tracker(model: BuildingModel, slots: SlotData, initial: ThermalState,
                     cfg: DeadbandConfig, coupling: float = 1.0) -> EnvelopeTracker:
    """Nominal trajectory from the thermostat baseline started at the true state."""
    traj = simulate_deadband(initial, slots.t_out, cfg, model, t_out_final=slots.t_out_final)
    return EnvelopeTracker.from_trajectory(traj.t_envelope, traj.t_indoor, coupling)


class ExactTransition:
    kind = "exact"

    def __init__(self, model: BuildingModel, slots: SlotData, tracker: EnvelopeTracker | None = None):
        self.model = model
        self.slots = slots
        self.tracker = tracker

    def __call__(self, k: int, t_indoor: np.ndarray, t_envelope: np.ndarray | None,
                 action: Action) -> SlotOutcome:
        if t_envelope is None:
            if self.tracker is None:
                raise ConfigurationError("indoor-only state space needs an envelope tracker")
            t_envelope = self.tracker(k, t_indoor)
        return self.model.slot(t_envelope, t_indoor, action,
                               self.slots.t_out[k], self.slots.t_out_end(k))


class SurrogateTransition:
    kind = "surrogate"

    def __init__(self, surrogate, slots: SlotData, report=None, gate_mae: float | None = None):
        if report is not None:
            ensure_gate(report, gate_mae)
        self.surrogate = surrogate
        self.slots = slots

    def __call__(self, k: int, t_indoor: np.ndarray, t_envelope: np.ndarray | None,
                 action: Action) -> SlotOutcome:
        if t_envelope is not None:
            raise ConfigurationError("the surrogate transition only supports the indoor state space")
        n = np.size(t_indoor)
        t_next, frac = self.surrogate.predict_batch(
            np.full(n, action.sign, dtype=float),
            np.asarray(t_indoor, dtype=float),
            np.full(n, self.slots.t_out[k]),
            np.full(n, self.slots.t_out_end(k)),
        )
        if action is Action.OFF:
            frac = np.zeros_like(frac)
        return SlotOutcome(np.full(n, np.nan), t_next, frac)
