"""Train, validate and benchmark one surrogate per PCM variant."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pcm_hems import config
from pcm_hems.control.deadband import simulate_deadband
from pcm_hems.errors import ConfigurationError
from pcm_hems.models import ProjectConfig
from pcm_hems.runner.scenarios import surrogate_label
from pcm_hems.surrogate import (
    benchmark_transition,
    closed_loop_drift,
    ensure_gate,
    generate_training_data,
    surrogate_path,
    train,
    validate,
)
from pcm_hems.thermal.model import ThermalState

logger = logging.getLogger(__name__)

DRIFT_SLOTS = 2 * config.SLOTS_PER_DAY


@dataclass
class SurrogateBuild:
    path: Path
    report_path: Path
    summary: dict


def weather_corpus(series) -> np.ndarray:
    """Concatenated outdoor temperatures of several sites, used as slot boundary values."""
    parts = [np.asarray(s.values, dtype=float) for s in series]
    if not parts:
        raise ConfigurationError("no weather series to train on")
    return np.concatenate(parts)


def build_surrogate(project: ProjectConfig, corpus, pcm_label: str | None, seed: int | None = None,
                    directory: str | Path | None = None) -> SurrogateBuild:
    """
    Generate exact-model samples, fit the network, validate it on a separate
    held-out set and enforce the configured MAE gate.

    Writes the model, its validation report and a training summary next to each other.
    """
    seed = project.seed if seed is None else seed
    settings = project.surrogate
    directory = Path(directory or settings.directory)
    pcm = project.pcm_spec(pcm_label) if pcm_label else None
    building = project.building_model(pcm)
    label = surrogate_label(pcm_label)
    t_range = (project.solver.grid_min, project.solver.grid_max)

    samples = generate_training_data(corpus, building, settings.samples, seed=seed, t_range=t_range)
    heldout = generate_training_data(corpus, building, settings.heldout, seed=seed + 1, t_range=t_range)
    model, training = train(samples, settings.training_config(seed), label=label)

    path = surrogate_path(directory, label)
    model.save(path)
    validation = validate(model, heldout, t_range, model_path=path)

    dead = simulate_deadband(ThermalState(project.initial_t_envelope, project.initial_t_indoor),
                             np.asarray(corpus[:DRIFT_SLOTS], dtype=float), project.deadband.to_config(),
                             building, t_out_final=float(corpus[DRIFT_SLOTS]))
    drift = closed_loop_drift(model, building, corpus[:DRIFT_SLOTS + 1], dead.actions,
                              ThermalState(project.initial_t_envelope, project.initial_t_indoor))
    if settings.drift_gate is not None and drift.max_deviation > settings.drift_gate:
        logger.warning("[surrogate] %s: closed-loop drift %.3f C exceeds %.3f C over %d slots",
                       label, drift.max_deviation, settings.drift_gate, DRIFT_SLOTS)
    bench = benchmark_transition(model, building, t_range=t_range)

    summary = {
        "label": label,
        "training": training.to_dict(),
        "validation": {"n": validation.n, "mae": validation.mae, "max_error": validation.max_error,
                       "on_fraction_mae": validation.on_fraction_mae},
        "drift_max": drift.max_deviation,
        "benchmark": bench,
        "gate_mae": settings.gate_mae,
    }
    summary_path = path.with_name(f"{path.stem}.training.json")
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    logger.info("[surrogate] %s: held-out MAE %.4f C, speed-up %.0fx, saved to %s",
                label, validation.mae, bench["speedup"], path)

    ensure_gate(validation, settings.gate_mae)
    return SurrogateBuild(path, summary_path, summary)
