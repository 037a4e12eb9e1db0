from multiprocessing.process import BaseProcess

# worker id -> { process, site (currently running, or None) }
workers: dict[str, dict] = {}


def register(worker_id: str, process: BaseProcess) -> None:
    workers[worker_id] = {"process": process, "site": None}


def assign(worker_id: str, site: str | None) -> None:
    if worker_id in workers:
        workers[worker_id]["site"] = site


def crashed() -> list[tuple[str, str | None, int | None]]:
    """(worker id, site it was running, exit code) for every dead worker that did not exit cleanly."""
    return [(wid, w["site"], w["process"].exitcode) for wid, w in workers.items()
            if not w["process"].is_alive() and w["process"].exitcode not in (0, None)]


def alive() -> list[str]:
    return [wid for wid, w in workers.items() if w["process"].is_alive()]


def clear() -> None:
    workers.clear()
