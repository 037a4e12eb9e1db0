"""
One (site, scenario) run: load inputs, control the building over the horizon,
and turn the closed-loop trajectory into result files.

HEMS runs are receding-horizon: every day is planned with MADP over that day
plus the configured lookahead, only the day itself is executed on the exact
model, and its final state seeds the next day.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from pcm_hems import config
from pcm_hems.control.deadband import DeadbandConfig, simulate_deadband
from pcm_hems.data.series import TimeSeries, load_series
from pcm_hems.data.tariff import TariffSchedule, label_series, price_series
from pcm_hems.errors import SelectionError, SurrogateGateError
from pcm_hems.metrics.economics import ScenarioResult, cost_by_window
from pcm_hems.models import ProjectConfig, ScenarioConfig, SolverSettings
from pcm_hems.optimizer import (
    EnvelopeTracker,
    ExactTransition,
    MdpInstance,
    Policy,
    PolicyTrajectory,
    SlotData,
    SolveReport,
    SurrogateTransition,
    deadband_tracker,
    energy_cost,
    grid_exchange,
    grid_from_settings,
    madp_solve,
    simulate_policy,
)
from pcm_hems.storage.results import ResultStore
from pcm_hems.surrogate import SurrogateModel, ValidationReport, ensure_gate, report_path, surrogate_path
from pcm_hems.thermal.hvac import Action
from pcm_hems.thermal.model import BuildingModel, ThermalState
from pcm_hems.thermal.pcm import pcm_soc_series
from pcm_hems.utils.hashing import hash_arrays

logger = logging.getLogger(__name__)

SOC_REFERENCE = 20.0


# ============================================================================
# Inputs
# ============================================================================

@dataclass(frozen=True)
class SiteData:
    site: str
    weather: TimeSeries
    pv: TimeSeries
    demand: TimeSeries
    t_out_final: float | None = None

    def horizon(self, start, days: int) -> "SiteData":
        """Restrict all three series to `days` days from `start`; keep the next weather value as the last boundary."""
        n = days * self.weather.slots_per_day
        weather = self.weather.window(start, n)
        final = None
        offset = int((pd.Timestamp(start) - self.weather.start).total_seconds() // self.weather.slot_seconds)
        if offset + n < len(self.weather):
            final = float(self.weather.values[offset + n])
        return SiteData(self.site, weather, self.pv.window(start, n), self.demand.window(start, n), final)

    def input_hash(self) -> str:
        return hash_arrays(self.weather.values, self.pv.values, self.demand.values)

    def slot_data(self, schedule: TariffSchedule, pv_scaling: float = 1.0) -> SlotData:
        return SlotData(
            t_out=self.weather.values,
            pv=self.pv.values * pv_scaling,
            demand=self.demand.values,
            price=price_series(schedule, self.weather.index),
            feed_in=schedule.feed_in,
            t_out_final=self.t_out_final,
        )


def load_site(site: str, paths: dict[str, Path], slot_seconds: int = config.SLOT_SECONDS) -> SiteData:
    data = SiteData(
        site,
        load_series(paths["weather"], "degC", slot_seconds, f"{site}/weather"),
        load_series(paths["pv"], "kWh/slot", slot_seconds, f"{site}/pv"),
        load_series(paths["demand"], "kWh/slot", slot_seconds, f"{site}/demand"),
    )
    starts = {data.weather.start, data.pv.start, data.demand.start}
    if len(starts) != 1:
        raise SelectionError(f"site '{site}': weather, pv and demand start at different times {sorted(starts)}")
    return data


# ============================================================================
# Surrogates
# ============================================================================

@dataclass(frozen=True)
class LoadedSurrogate:
    model: SurrogateModel
    report: ValidationReport | None
    path: Path


def surrogate_label(pcm_label: str | None) -> str:
    return pcm_label or "nopcm"


def load_surrogate(directory: str | Path, pcm_label: str | None, gate_mae: float | None) -> LoadedSurrogate:
    path = surrogate_path(directory, surrogate_label(pcm_label))
    model = SurrogateModel.load(path)
    rpath = report_path(path)
    report = ValidationReport.load(rpath) if rpath.is_file() else None
    if gate_mae is not None:
        if report is None:
            raise SurrogateGateError(f"surrogate {path} has no validation report; run train-surrogate")
        ensure_gate(report, gate_mae)
    return LoadedSurrogate(model, report, path)


# ============================================================================
# Controllers
# ============================================================================

def state_space(solver: SolverSettings):
    envelope = tuple(solver.envelope_grid) if solver.state_mode == "envelope" else None
    return grid_from_settings(solver.grid_min, solver.grid_max, solver.resolution, tuple(solver.comfort), envelope)


def concat_trajectories(pieces: list[PolicyTrajectory]) -> PolicyTrajectory:
    first = pieces[0]

    def joined(name):
        return np.concatenate([getattr(p, name) for p in pieces])

    return PolicyTrajectory(
        t_indoor=np.concatenate([first.t_indoor[:1]] + [p.t_indoor[1:] for p in pieces]),
        t_envelope=np.concatenate([first.t_envelope[:1]] + [p.t_envelope[1:] for p in pieces]),
        actions=joined("actions"),
        on_fraction=joined("on_fraction"),
        hvac_kwh=joined("hvac_kwh"),
        imported=joined("imported"),
        exported=joined("exported"),
        energy_cost=joined("energy_cost"),
        penalty=joined("penalty"),
        off_grid_lookups=sum(p.off_grid_lookups for p in pieces),
    )


def run_hems(
    model: BuildingModel,
    slots: SlotData,
    initial: ThermalState,
    solver: SolverSettings,
    deadband: DeadbandConfig,
    surrogate: LoadedSurrogate | None = None,
    gate_mae: float | None = None,
    slots_per_day: int = config.SLOTS_PER_DAY,
) -> tuple[PolicyTrajectory, SolveReport]:
    space = state_space(solver)
    comfort = tuple(solver.comfort)
    penalty = solver.penalty()
    lookahead = solver.lookahead_days * slots_per_day
    report = SolveReport()
    pieces = []
    state = initial
    horizon = len(slots)

    for d0 in range(0, horizon, slots_per_day):
        d1 = min(d0 + slots_per_day, horizon)
        window = slots.window(d0, min(d1 + lookahead, horizon))
        tracker: EnvelopeTracker | None = None
        result = None
        for it in range(solver.tracking_iterations):
            if solver.transition == "surrogate":
                if surrogate is None:
                    raise SurrogateGateError("surrogate transition selected but no surrogate model loaded")
                transition = SurrogateTransition(surrogate.model, window, surrogate.report, gate_mae)
            elif space.two_dimensional:
                transition = ExactTransition(model, window)
            else:
                tracker = tracker or deadband_tracker(model, window, state, deadband, solver.coupling)
                transition = ExactTransition(model, window, tracker)
            mdp = MdpInstance(window, model.hvac, transition, comfort, penalty, model.slot_seconds)
            result = madp_solve(mdp, space, solver.sub_horizon)
            report.merge(result.report)
            if it + 1 < solver.tracking_iterations and transition.kind == "exact" and not space.two_dimensional:
                nominal = simulate_policy(result.policy, space, state, model, window, comfort, penalty)
                tracker = EnvelopeTracker.from_trajectory(nominal.t_envelope[:-1], nominal.t_indoor[:-1],
                                                          solver.coupling)
        today = Policy(result.policy.actions[: d1 - d0])
        piece = simulate_policy(today, space, state, model, window.window(0, d1 - d0), comfort, penalty)
        pieces.append(piece)
        state = piece.final_state
        logger.debug("[runner] day %d planned: cost %.2f $", d0 // slots_per_day, piece.total_cost)

    return concat_trajectories(pieces), report


def run_deadband(model: BuildingModel, slots: SlotData, initial: ThermalState, cfg: DeadbandConfig,
                 comfort: tuple[float, float], penalty) -> PolicyTrajectory:
    """Thermostat baseline in the same trajectory shape as an optimized run."""
    traj = simulate_deadband(initial, slots.t_out, cfg, model, t_out_final=slots.t_out_final)
    hvac_kwh = np.asarray(traj.hvac_kwh)
    imported, exported = grid_exchange(slots.demand, slots.pv, hvac_kwh)
    t_in = np.append(traj.t_indoor, traj.final_state.t_indoor)
    return PolicyTrajectory(
        t_indoor=t_in,
        t_envelope=np.append(traj.t_envelope, traj.final_state.t_envelope),
        actions=np.asarray([int(a) for a in traj.actions], dtype=np.int8),
        on_fraction=np.asarray(traj.on_fraction),
        hvac_kwh=hvac_kwh,
        imported=imported,
        exported=exported,
        energy_cost=energy_cost(imported, exported, slots.price, slots.feed_in),
        penalty=penalty(t_in[1:], comfort),
    )


# ============================================================================
# Scenario
# ============================================================================

@dataclass
class ScenarioRun:
    config: ScenarioConfig
    result: ScenarioResult
    trajectory: pd.DataFrame
    summary: dict
    files: dict[str, Path] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)


def transitions_count(actions) -> int:
    a = np.asarray(actions)
    return int(np.count_nonzero(a[1:] != a[:-1])) if a.size > 1 else 0


def trajectory_frame(index: pd.DatetimeIndex, slots: SlotData, traj: PolicyTrajectory,
                     schedule: TariffSchedule, model: BuildingModel) -> pd.DataFrame:
    if model.pcm is not None:
        soc = pcm_soc_series(traj.t_envelope[1:], SOC_REFERENCE, model.pcm, model.hvac.cop)
    else:
        soc = np.zeros(len(slots))
    return pd.DataFrame({
        "timestamp": index.strftime("%Y-%m-%dT%H:%M:%S"),
        "t_out": slots.t_out,
        "t_in_start": traj.t_indoor[:-1],
        "t_in": traj.t_indoor[1:],
        "t_envelope": traj.t_envelope[1:],
        "action": [Action(int(a)).name.lower() for a in traj.actions],
        "on_fraction": traj.on_fraction,
        "pv": slots.pv,
        "demand": slots.demand,
        "hvac": traj.hvac_kwh,
        "import": traj.imported,
        "export": traj.exported,
        "price": slots.price,
        "tariff_window": label_series(schedule, index),
        "soc": soc,
    })


def run_scenario(cfg: ScenarioConfig, project: ProjectConfig, site: SiteData, group: str | None = None,
                 surrogate: LoadedSurrogate | None = None, store: ResultStore | None = None) -> ScenarioRun:
    """
    Simulate one scenario on a site's (already windowed) inputs.

    Deadband scenarios run the thermostat; HEMS scenarios run the day-by-day
    MADP planner with exact forward simulation.
    """
    started = time.perf_counter()
    pcm = project.pcm_spec(cfg.pcm_label) if cfg.pcm_enabled else None
    model = project.building_model(pcm)
    schedule = project.tariff.schedule()
    slots = site.slot_data(schedule, cfg.pv_scaling)
    initial = ThermalState(project.initial_t_envelope, project.initial_t_indoor)
    comfort = tuple(project.solver.comfort)
    penalty = project.solver.penalty()

    report = None
    if cfg.controller == "deadband":
        traj = run_deadband(model, slots, initial, project.deadband.to_config(), comfort, penalty)
    else:
        traj, report = run_hems(model, slots, initial, project.solver, project.deadband.to_config(),
                                surrogate, project.surrogate.gate_mae)

    result = ScenarioResult(
        site=cfg.site, scenario=cfg.scenario,
        imported=traj.imported, exported=traj.exported, pv=slots.pv, demand=slots.demand,
        hvac_kwh=traj.hvac_kwh, t_indoor=traj.t_indoor[1:], price=slots.price, feed_in=slots.feed_in,
        hvac_transitions=transitions_count(traj.actions),
        comfort_violations=traj.violations(comfort),
    )
    index = site.weather.index
    frame = trajectory_frame(index, slots, traj, schedule, model)
    summary = result.totals()
    summary.update({
        "run_label": cfg.run_label,
        "group": group or cfg.site,
        "controller": cfg.controller,
        "pcm_label": cfg.pcm_label,
        "pv_scaling": cfg.pv_scaling,
        "input_hash": site.input_hash(),
        "comfort_penalty": float(np.sum(traj.penalty)),
        "cost_by_window": cost_by_window(result.imported, result.exported, result.price,
                                         result.feed_in, index, schedule),
        "off_grid_lookups": traj.off_grid_lookups,
    })
    if report is not None:
        summary["solver"] = {"transition": report.transition, "cells": report.cells,
                             "clamped": report.clamped, "transition_calls": report.transition_calls}

    run = ScenarioRun(cfg, result, frame, summary)
    if store is not None:
        run.files = store.write_run(cfg.site, cfg.run_label, frame, summary)
    run.timings = {"total_s": time.perf_counter() - started}
    if report is not None:
        run.timings.update({"solve_s": report.runtime_s, "transition_s": report.transition_s})
    logger.info(
        "[runner] %s/%s: cost %.2f $, HVAC %.1f kWh, SC %.1f %%, %d transitions",
        cfg.site, cfg.run_label, result.cost, result.hvac_total, result.sc, result.hvac_transitions,
    )
    return run
