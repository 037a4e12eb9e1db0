"""
Deterministic finite-horizon HEMS MDP and its backward-induction solver.

State: indoor temperature cell (or (T_e, T_in) cell). Decision: HVAC action per
half-hour slot. Stage cost: ToU import minus feed-in export, plus a comfort
penalty on the temperature reached at the end of the slot. The horizon is
undiscounted.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from pcm_hems.errors import ConfigurationError
from pcm_hems.thermal.hvac import ACTIONS, Action, HvacSpec, electrical_energy_kwh
from pcm_hems.thermal.model import SlotOutcome

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotData:
    """Exogenous per-slot inputs. Energies are kWh per slot, prices $/kWh."""

    t_out: np.ndarray
    pv: np.ndarray
    demand: np.ndarray
    price: np.ndarray
    feed_in: float
    t_out_final: float | None = None  # boundary after the last slot

    def __post_init__(self):
        lengths = {len(self.t_out), len(self.pv), len(self.demand), len(self.price)}
        if len(lengths) != 1:
            raise ConfigurationError(f"exogenous series lengths differ: {sorted(lengths)}")
        for name in ("t_out", "pv", "demand", "price"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ConfigurationError(f"non-finite values in slot series '{name}'")

    def __len__(self) -> int:
        return len(self.t_out)

    def t_out_end(self, k: int) -> float:
        if k + 1 < len(self):
            return float(self.t_out[k + 1])
        return float(self.t_out[k] if self.t_out_final is None else self.t_out_final)

    def window(self, start: int, stop: int) -> "SlotData":
        stop = min(stop, len(self))
        final = self.t_out_end(stop - 1) if stop > start else self.t_out_final
        return SlotData(
            t_out=self.t_out[start:stop], pv=self.pv[start:stop], demand=self.demand[start:stop],
            price=self.price[start:stop], feed_in=self.feed_in, t_out_final=final,
        )


@dataclass(frozen=True)
class ComfortPenalty:
    per_slot: float = 10.0    # $ per violated slot
    per_degree: float = 1.0   # $ per K of violation depth

    def __call__(self, t_in, comfort: tuple[float, float]):
        lo, hi = comfort
        depth = np.maximum(lo - np.asarray(t_in), 0.0) + np.maximum(np.asarray(t_in) - hi, 0.0)
        return np.where(depth > 0, self.per_slot + self.per_degree * depth, 0.0)


class Transition(Protocol):
    kind: str

    def __call__(self, k: int, t_indoor: np.ndarray, t_envelope: np.ndarray | None,
                 action: Action) -> SlotOutcome: ...


@dataclass
class MdpInstance:
    slots: SlotData
    hvac: HvacSpec
    transition: Transition
    comfort: tuple[float, float] = (20.0, 24.0)
    penalty: ComfortPenalty = field(default_factory=ComfortPenalty)
    slot_seconds: float = 1800.0
    actions: tuple[Action, ...] = ACTIONS

    def __post_init__(self):
        if not self.comfort[0] < self.comfort[1]:
            raise ConfigurationError(f"empty comfort band {self.comfort}")
        self.actions = tuple(a for a in ACTIONS if a in self.actions and self.hvac.supports(a))

    @property
    def horizon(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class ValueTable:
    values: np.ndarray  # (K+1, n_cells), row K is the terminal layer


@dataclass(frozen=True)
class Policy:
    actions: np.ndarray  # (K, n_cells) of Action codes

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def action(self, k: int, cell: int) -> Action:
        return Action(int(self.actions[k, cell]))

    @staticmethod
    def concat(parts: list["Policy"]) -> "Policy":
        if not parts:
            return Policy(np.zeros((0, 0), dtype=np.int8))
        return Policy(np.concatenate([p.actions for p in parts], axis=0))


@dataclass
class SolveReport:
    transition: str = ""
    cells: int = 0
    slots: int = 0
    runtime_s: float = 0.0
    transition_s: float = 0.0
    transition_calls: int = 0
    clamped: int = 0
    warnings: list[str] = field(default_factory=list)

    def merge(self, other: "SolveReport") -> None:
        self.transition = self.transition or other.transition
        self.cells = max(self.cells, other.cells)
        self.slots += other.slots
        self.runtime_s += other.runtime_s
        self.transition_s += other.transition_s
        self.transition_calls += other.transition_calls
        self.clamped += other.clamped
        self.warnings.extend(other.warnings)

    def to_dict(self) -> dict:
        return {
            "transition": self.transition, "cells": self.cells, "slots": self.slots,
            "runtime_s": round(self.runtime_s, 4), "transition_s": round(self.transition_s, 4),
            "transition_calls": self.transition_calls, "clamped": self.clamped,
            "warnings": list(self.warnings),
        }


def grid_exchange(demand, pv, hvac_kwh):
    """Slot import and export in kWh from net household load."""
    net = np.asarray(demand) + np.asarray(hvac_kwh) - np.asarray(pv)
    return np.maximum(net, 0.0), np.maximum(-net, 0.0)


def energy_cost(imported, exported, price, feed_in: float):
    return np.asarray(price) * imported - feed_in * np.asarray(exported)


def stage_cost(
    action: Action,
    demand,
    pv,
    price,
    feed_in: float,
    hvac: HvacSpec,
    next_t_in,
    comfort: tuple[float, float],
    penalty: ComfortPenalty,
    on_fraction=1.0,
    slot_seconds: float = 1800.0,
):
    """ToU import cost minus feed-in credit plus the comfort penalty on next_t_in."""
    frac = 0.0 if action is Action.OFF else on_fraction
    hvac_kwh = electrical_energy_kwh(frac, hvac, slot_seconds)
    imported, exported = grid_exchange(demand, pv, hvac_kwh)
    cost = energy_cost(imported, exported, price, feed_in) + penalty(next_t_in, comfort)
    return float(cost) if np.ndim(cost) == 0 else cost


def terminal_values(space, comfort: tuple[float, float], penalty: ComfortPenalty) -> np.ndarray:
    """Zero inside the comfort band, penalty-shaped outside."""
    return np.asarray(penalty(space.cell_t_indoor(), comfort), dtype=float)


def value_iteration(mdp: MdpInstance, space, terminal: np.ndarray,
                    report: SolveReport | None = None) -> tuple[ValueTable, Policy]:
    """
    Backward induction V[k][s] = min_a stage_cost + V[k+1][round(next(s, a))].

    Ties resolve to the earliest action in (off, heat, cool) order.
    """
    started = time.perf_counter()
    report = report if report is not None else SolveReport()
    report.transition = mdp.transition.kind
    report.cells = space.n_cells
    report.slots += mdp.horizon

    terminal = np.asarray(terminal, dtype=float)
    if terminal.shape != (space.n_cells,):
        raise ConfigurationError(
            f"terminal values have shape {terminal.shape}, expected ({space.n_cells},)"
        )

    horizon = mdp.horizon
    values = np.empty((horizon + 1, space.n_cells))
    values[horizon] = terminal
    policy = np.zeros((horizon, space.n_cells), dtype=np.int8)

    t_in_cells = space.cell_t_indoor()
    t_e_cells = space.cell_t_envelope()
    slots = mdp.slots
    clamped_total = 0
    first_clamp = None

    for k in range(horizon - 1, -1, -1):
        q = np.empty((len(mdp.actions), space.n_cells))
        for j, action in enumerate(mdp.actions):
            t0 = time.perf_counter()
            out = mdp.transition(k, t_in_cells, t_e_cells, action)
            report.transition_s += time.perf_counter() - t0
            report.transition_calls += 1

            idx, clamped = space.locate(out.t_envelope, out.t_indoor)
            n_clamped = int(np.count_nonzero(clamped))
            if n_clamped:
                clamped_total += n_clamped
                first_clamp = k if first_clamp is None else first_clamp
            q[j] = stage_cost(
                action, slots.demand[k], slots.pv[k], slots.price[k], slots.feed_in,
                mdp.hvac, out.t_indoor, mdp.comfort, mdp.penalty,
                on_fraction=out.on_fraction, slot_seconds=mdp.slot_seconds,
            ) + values[k + 1][idx]
        best = np.argmin(q, axis=0)
        values[k] = q[best, np.arange(space.n_cells)]
        policy[k] = np.asarray([int(a) for a in mdp.actions], dtype=np.int8)[best]

    if clamped_total:
        msg = f"{clamped_total} transitions left the grid and were clamped (latest slot {first_clamp})"
        logger.warning("[optimizer] %s", msg)
        report.warnings.append(msg)
        report.clamped += clamped_total

    report.runtime_s += time.perf_counter() - started
    return ValueTable(values), Policy(policy)
