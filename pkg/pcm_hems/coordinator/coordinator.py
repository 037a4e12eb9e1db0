"""
Coordinator

Responsibilities:
1. Turn the project config into one job per site.
2. Start site workers (spawned processes) and hand them jobs on a control queue.
3. Collect PROGRESS / DONE / FAILED events and detect crashed workers.
4. Send STOP to every worker once the queue is drained.
5. Write the run manifest and the activity log.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import queue
import time
import uuid

from pcm_hems import __version__
from pcm_hems.errors import ConfigurationError
from pcm_hems.models import ProjectConfig, RunManifest, SiteRecord
from pcm_hems.runner.scenarios import load_surrogate
from pcm_hems.storage.results import ResultStore
from pcm_hems.surrogate import benchmark_transition
from pcm_hems.utils.activity_logger import log_activity
from pcm_hems.utils.hashing import hash_payload
from pcm_hems.utils.system_specs import available_workers, get_system_specs
from pcm_hems.workers import registry
from pcm_hems.workers.site_worker import STOP, SiteJob, process_job, site_worker

logger = logging.getLogger(__name__)

EVENT_TIMEOUT = 0.5  # seconds
MIN_SPEEDUP = 50.0  # surrogate vs exact transition


def make_jobs(project: ProjectConfig, data_dir, output_dir, sites=None, scenarios=None,
              pcm_labels=None, pv_scalings=None) -> list[SiteJob]:
    names = [s.name for s in project.sites]
    if sites:
        unknown = sorted(set(sites) - set(names))
        if unknown:
            raise ConfigurationError(f"unknown sites {unknown}; configured: {names}")
        names = [n for n in names if n in set(sites)]
    if not names:
        raise ConfigurationError("no sites configured")
    for label in pcm_labels or ():
        project.pcm_spec(label)
    return [
        SiteJob(
            site=name, data_dir=str(data_dir), output_dir=str(output_dir),
            scenarios=tuple(scenarios) if scenarios else None,
            pcm_labels=tuple(pcm_labels) if pcm_labels else None,
            pv_scalings=tuple(pv_scalings) if pv_scalings else None,
        )
        for name in names
    ]


def handle_event(event: dict, manifest: RunManifest, run_id: str, log_dir) -> None:
    """Apply one worker event to the manifest."""
    kind, site, worker = event.get("type"), event.get("site"), event.get("worker")
    if kind == "PROGRESS":
        registry.assign(worker, site)
        if event.get("run") is None:
            logger.info("[coordinator:%s] %s started on %s", run_id, site, worker)
        else:
            logger.info("[coordinator:%s] %s %s done (%d/%d)", run_id, site, event["run"],
                        event["step"], event["of"])
    elif kind == "DONE":
        registry.assign(worker, None)
        manifest.sites[site] = SiteRecord.model_validate(event["record"])
        log_activity(log_dir=log_dir, action="SITE_DONE", site=site,
                     metadata={"run_id": run_id, "worker": worker})
        logger.info("[coordinator:%s] %s completed (%d/%d)", run_id, site,
                    sum(r.status != "pending" for r in manifest.sites.values()), len(manifest.sites))
    elif kind == "FAILED":
        registry.assign(worker, None)
        manifest.sites[site] = SiteRecord(status="failed", worker=worker, error=event.get("error"))
        log_activity(log_dir=log_dir, action="SITE_FAILED", site=site,
                     metadata={"run_id": run_id, "worker": worker, "error": event.get("error")})
        logger.error("[coordinator:%s] %s failed: %s", run_id, site, event.get("error"))
    else:
        logger.warning("[coordinator:%s] raw event: %s", run_id, event)


def _pending(manifest: RunManifest) -> list[str]:
    return [s for s, r in manifest.sites.items() if r.status == "pending"]


def _run_processes(project: ProjectConfig, jobs: list[SiteJob], n_workers: int, manifest: RunManifest,
                   run_id: str, log_dir, log_level: str) -> None:
    ctx = mp.get_context("spawn")
    control_queue = ctx.Queue()
    event_queue = ctx.Queue()
    for job in jobs:
        control_queue.put(job)
    for _ in range(n_workers):
        control_queue.put(STOP)

    payload = project.model_dump_json()
    for i in range(n_workers):
        wid = f"w{i}"
        process = ctx.Process(target=site_worker, args=(wid, payload, control_queue, event_queue, log_level),
                              name=f"pcm-hems-{wid}", daemon=True)
        process.start()
        registry.register(wid, process)
    logger.info("[coordinator:%s] %d workers started for %d sites", run_id, n_workers, len(jobs))

    handled: set[str] = set()
    try:
        while _pending(manifest):
            try:
                handle_event(event_queue.get(timeout=EVENT_TIMEOUT), manifest, run_id, log_dir)
                continue
            except queue.Empty:
                pass
            for wid, site, code in registry.crashed():
                if wid in handled:
                    continue
                handled.add(wid)
                if site is not None and manifest.sites[site].status == "pending":
                    handle_event({"type": "FAILED", "worker": wid, "site": site,
                                  "error": f"worker exited with code {code}"}, manifest, run_id, log_dir)
            if not registry.alive():
                # drain what the last workers sent before exiting
                while True:
                    try:
                        handle_event(event_queue.get(timeout=EVENT_TIMEOUT), manifest, run_id, log_dir)
                    except queue.Empty:
                        break
                for site in _pending(manifest):
                    handle_event({"type": "FAILED", "worker": None, "site": site,
                                  "error": "no live worker left to run the site"}, manifest, run_id, log_dir)
    finally:
        for wid in list(registry.workers):
            process = registry.workers[wid]["process"]
            process.join(timeout=5)
            if process.is_alive():
                process.terminate()
        registry.clear()
        logger.info("[coordinator:%s] all workers stopped", run_id)


def surrogate_benchmark(project: ProjectConfig) -> dict:
    """Speed of the surrogate transition against the exact slot step, for the manifest."""
    loaded = load_surrogate(project.surrogate.directory, project.pcm_label, project.surrogate.gate_mae)
    model = project.building_model(project.pcm_spec())
    bench = benchmark_transition(loaded.model, model)
    bench["path"] = str(loaded.path)
    if loaded.report is not None:
        bench["validation_mae"] = loaded.report.mae
    if bench["speedup"] < MIN_SPEEDUP:
        logger.warning("[coordinator] surrogate speed-up %.1fx is below %.0fx for %d states",
                       bench["speedup"], MIN_SPEEDUP, bench["states"])
    return bench


def run_project(project: ProjectConfig, data_dir, output_dir, workers: int = 1, sites=None,
                scenarios=None, pcm_labels=None, pv_scalings=None, log_level: str = "INFO") -> RunManifest:
    """
    Run every configured scenario for every site and write the manifest.

    Site failures are recorded, never raised; check `manifest.failed`.
    """
    started = time.perf_counter()
    run_id = uuid.uuid4().hex[:8]
    store = ResultStore(output_dir)
    jobs = make_jobs(project, data_dir, output_dir, sites, scenarios, pcm_labels, pv_scalings)
    n_workers = available_workers(min(workers, len(jobs)))

    manifest = RunManifest(
        config_hash=hash_payload(project.model_dump(mode="json")),
        code_version=__version__,
        seeds={"project": project.seed},
        workers=n_workers,
        sites={job.site: SiteRecord() for job in jobs},
        system=get_system_specs(),
    )
    log_activity(log_dir=store.log_dir, action="RUN_START",
                 metadata={"run_id": run_id, "sites": [j.site for j in jobs], "workers": n_workers,
                           "config_hash": manifest.config_hash})

    if project.solver.transition == "surrogate":
        manifest.surrogate = surrogate_benchmark(project)
        logger.info("[coordinator:%s] surrogate transition %.0fx faster than the exact step",
                    run_id, manifest.surrogate["speedup"])

    if n_workers == 1:
        for job in jobs:
            process_job(project, job, "inline",
                        lambda event: handle_event(event, manifest, run_id, store.log_dir))
    else:
        _run_processes(project, jobs, n_workers, manifest, run_id, store.log_dir, log_level)

    manifest.wall_clock_s = time.perf_counter() - started
    manifest.save(store.manifest_path)
    log_activity(log_dir=store.log_dir, action="RUN_DONE",
                 metadata={"run_id": run_id, "failed": manifest.failed, "wall_clock_s": manifest.wall_clock_s})
    logger.info("[coordinator:%s] run finished in %.1f s, %d failed sites", run_id, manifest.wall_clock_s,
                len(manifest.failed))
    return manifest
