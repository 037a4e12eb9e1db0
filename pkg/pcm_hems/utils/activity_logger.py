import json
import threading
from datetime import datetime
from pathlib import Path

_lock = threading.Lock()


def log_activity(
    *,
    log_dir: str | Path,
    action: str,
    site: str | None = None,
    scenario: str | None = None,
    metadata: dict | None = None,
) -> None:
    """
    Persist one run event as a JSON line for auditing.

    Activity logs live next to the results but are not result files: they carry
    wall-clock stamps and are excluded from the determinism contract.
    """
    now = datetime.utcnow()
    record = {
        "action": action,  # RUN_START | SITE_DONE | SITE_FAILED | RUN_DONE | ...
        "site": site,
        "scenario": scenario,
        "metadata": metadata or {},
        "created_at": now.isoformat(timespec="seconds"),
        "day": now.strftime("%Y-%m-%d"),
        "time": now.strftime("%H:%M:%S"),
    }
    path = Path(log_dir) / "activity.jsonl"
    path.parent.mkdir(parents=True, exist_ok=True)
    with _lock, path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True, default=str) + "\n")
