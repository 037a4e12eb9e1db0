"""
Site worker runtime.

A worker process pulls site jobs from its control queue until it receives
STOP, runs every scenario of the site and reports on the event queue:

- PROGRESS  a site started, or one of its scenario runs finished
- DONE      the site finished; carries the SiteRecord for the manifest
- FAILED    the site raised; other sites keep going
"""

from __future__ import annotations

import logging
import time
import traceback
from dataclasses import dataclass
from typing import Callable

from pcm_hems.errors import ConfigurationError, PcmHemsError
from pcm_hems.models import ProjectConfig, ScenarioConfig, SiteRecord
from pcm_hems.runner.scenarios import LoadedSurrogate, load_site, load_surrogate, run_scenario
from pcm_hems.storage.results import ResultStore
from pcm_hems.utils.log_setup import configure_logging

logger = logging.getLogger(__name__)

STOP = "STOP"


@dataclass(frozen=True)
class SiteJob:
    site: str
    data_dir: str
    output_dir: str
    scenarios: tuple[str, ...] | None = None
    pcm_labels: tuple[str, ...] | None = None
    pv_scalings: tuple[float, ...] | None = None


def site_configs(project: ProjectConfig, job: SiteJob) -> list[ScenarioConfig]:
    """Scenario configs of a job, one per distinct run label, in config order."""
    site = next((s for s in project.sites if s.name == job.site), None)
    if site is None:
        raise ConfigurationError(f"site '{job.site}' is not in the config")
    scenarios = list(job.scenarios) if job.scenarios else None
    pv = list(job.pv_scalings) if job.pv_scalings else None
    configs: dict[str, ScenarioConfig] = {}
    for label in job.pcm_labels or (None,):
        for cfg in project.scenario_configs(site, job.data_dir, job.output_dir, scenarios, label, pv):
            configs.setdefault(cfg.run_label, cfg)
    return list(configs.values())


def run_site(project: ProjectConfig, job: SiteJob, worker: str = "inline",
             emit: Callable[[dict], None] = lambda event: None) -> SiteRecord:
    started = time.perf_counter()
    configs = site_configs(project, job)
    for cfg in configs:
        cfg.check_files()
    group = next(s.group for s in project.sites if s.name == job.site)

    loaded = load_site(job.site, configs[0].data)
    data = loaded.horizon(project.horizon.start, project.horizon.days)
    input_hash = data.input_hash()
    store = ResultStore(job.output_dir)

    surrogates: dict[str | None, LoadedSurrogate] = {}
    record = SiteRecord(status="pending", worker=worker)
    for i, cfg in enumerate(configs, start=1):
        surrogate = None
        if cfg.controller == "hems" and project.solver.transition == "surrogate":
            if cfg.pcm_label not in surrogates:
                surrogates[cfg.pcm_label] = load_surrogate(project.surrogate.directory, cfg.pcm_label,
                                                           project.surrogate.gate_mae)
            surrogate = surrogates[cfg.pcm_label]
        run = run_scenario(cfg, project, data, group, surrogate, store)
        for name, path in run.files.items():
            record.files[f"{cfg.run_label}/{name}"] = str(path)
        record.input_hashes[cfg.run_label] = input_hash
        for name, value in run.timings.items():
            record.timings[f"{cfg.run_label}/{name}"] = value
        emit({"type": "PROGRESS", "worker": worker, "site": job.site, "run": cfg.run_label,
              "step": i, "of": len(configs)})

    record.file_hashes = ResultStore.hashes({k: v for k, v in record.files.items()})
    record.timings["total_s"] = time.perf_counter() - started
    record.status = "done"
    return record


def process_job(project: ProjectConfig, job: SiteJob, worker: str, emit: Callable[[dict], None]) -> None:
    """Run one job and report DONE or FAILED; never raises for a site-level failure."""
    emit({"type": "PROGRESS", "worker": worker, "site": job.site, "run": None})
    try:
        record = run_site(project, job, worker, emit)
    except PcmHemsError as e:
        logger.error("[worker:%s] site %s failed: %s", worker, job.site, e)
        emit({"type": "FAILED", "worker": worker, "site": job.site, "error": f"{type(e).__name__}: {e}"})
    except Exception as e:
        logger.error("[worker:%s] site %s crashed:\n%s", worker, job.site, traceback.format_exc())
        emit({"type": "FAILED", "worker": worker, "site": job.site, "error": f"{type(e).__name__}: {e}"})
    else:
        emit({"type": "DONE", "worker": worker, "site": job.site, "record": record.model_dump(mode="json")})


def site_worker(worker: str, project_json: str, control_queue, event_queue, log_level: str = "INFO") -> None:
    """Entrypoint for Process(target=site_worker, args=(worker, project_json, control_queue, event_queue))."""
    configure_logging(log_level)
    project = ProjectConfig.model_validate_json(project_json)
    logger.info("[worker:%s] started", worker)
    try:
        while True:
            job = control_queue.get()
            if job == STOP:
                break
            process_job(project, job, worker, event_queue.put)
    finally:
        logger.info("[worker:%s] stopped", worker)
        event_queue.close()
        event_queue.join_thread()
