"""
Multi-timescale decomposition: the horizon is cut into sub-horizons (one day by
default) that are solved last-to-first. Each sub-MDP takes the first value
layer of its successor as terminal values, so only one value table is alive at
a time. The full policy is then traced forward from the true initial state.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from pcm_hems.errors import ConfigurationError
from pcm_hems.optimizer.mdp import (
    MdpInstance,
    Policy,
    SolveReport,
    stage_cost,
    terminal_values,
    value_iteration,
)
from pcm_hems.thermal.hvac import Action
from pcm_hems.thermal.model import SlotOutcome, ThermalState

logger = logging.getLogger(__name__)


class _OffsetTransition:
    """Presents a slice of a horizon-wide transition with local slot indices."""

    def __init__(self, inner, offset: int):
        self.inner = inner
        self.offset = offset
        self.kind = inner.kind

    def __call__(self, k: int, t_indoor, t_envelope, action: Action) -> SlotOutcome:
        return self.inner(k + self.offset, t_indoor, t_envelope, action)


@dataclass
class MadpResult:
    policy: Policy
    initial_values: np.ndarray
    report: SolveReport
    planned_actions: list[Action] = field(default_factory=list)
    planned_cost: float | None = None


def split_horizon(horizon: int, sub_horizon: int) -> list[tuple[int, int]]:
    if sub_horizon < 1:
        raise ConfigurationError(f"sub-horizon must be >= 1 slot, got {sub_horizon}")
    return [(s, min(s + sub_horizon, horizon)) for s in range(0, horizon, sub_horizon)]


def madp_solve(
    mdp: MdpInstance,
    space,
    sub_horizon: int = 48,
    terminal: np.ndarray | None = None,
    initial: ThermalState | None = None,
) -> MadpResult:
    started = time.perf_counter()
    report = SolveReport()
    terminal = terminal_values(space, mdp.comfort, mdp.penalty) if terminal is None else terminal

    windows = split_horizon(mdp.horizon, sub_horizon)
    parts: list[Policy] = [Policy(np.zeros((0, space.n_cells), dtype=np.int8))] * len(windows)
    handoff = np.asarray(terminal, dtype=float)
    for i in range(len(windows) - 1, -1, -1):
        start, stop = windows[i]
        sub = MdpInstance(
            slots=mdp.slots.window(start, stop),
            hvac=mdp.hvac,
            transition=_OffsetTransition(mdp.transition, start),
            comfort=mdp.comfort,
            penalty=mdp.penalty,
            slot_seconds=mdp.slot_seconds,
            actions=mdp.actions,
        )
        values, part = value_iteration(sub, space, handoff, report)
        parts[i] = part
        handoff = values.values[0]
        logger.debug("[optimizer] sub-horizon %d/%d solved (slots %d-%d)", i + 1, len(windows), start, stop)

    policy = Policy.concat(parts) if windows else Policy(np.zeros((0, space.n_cells), dtype=np.int8))
    result = MadpResult(policy=policy, initial_values=handoff, report=report)
    if initial is not None:
        trace_plan(result, mdp, space, initial)
    report.runtime_s = time.perf_counter() - started
    logger.info(
        "[optimizer] MADP %s: %d slots in %d sub-horizons, %d cells, %.2fs",
        mdp.transition.kind, mdp.horizon, len(windows), space.n_cells, report.runtime_s,
    )
    return result


def trace_plan(result: MadpResult, mdp: MdpInstance, space, initial: ThermalState) -> None:
    """Follow the minimum-value path through the solver's own (rounded) dynamics."""
    t_e = np.asarray([initial.t_envelope]) if space.two_dimensional else None
    t_in = np.asarray([initial.t_indoor])
    cell, _ = space.locate(t_e, t_in)
    total = 0.0
    actions = []
    slots = mdp.slots
    for k in range(mdp.horizon):
        action = result.policy.action(k, int(cell[0]))
        cell_in = space.cell_t_indoor()[cell]
        cell_e = space.cell_t_envelope()[cell] if space.two_dimensional else None
        out = mdp.transition(k, cell_in, cell_e, action)
        total += float(np.sum(stage_cost(
            action, slots.demand[k], slots.pv[k], slots.price[k], slots.feed_in, mdp.hvac,
            out.t_indoor, mdp.comfort, mdp.penalty, out.on_fraction, mdp.slot_seconds,
        )))
        cell, _ = space.locate(out.t_envelope, out.t_indoor)
        actions.append(action)
    result.planned_actions = actions
    result.planned_cost = total
