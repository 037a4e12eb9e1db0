"""
Local result store.

Layout under the output root:

    <root>/<site>/<run_label>/trajectory.csv
    <root>/<site>/<run_label>/summary.json
    <root>/tables/*.csv
    <root>/plots/<site>/<run_label>_<week>.csv
    <root>/manifest.json
    <root>/logs/activity.jsonl

Writers are deterministic: fixed column order, sorted JSON keys and a fixed
float format, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import pandas as pd

from pcm_hems.errors import LoadError
from pcm_hems.utils.hashing import hash_file

FLOAT_FORMAT = "%.10g"

# summary keys whose NaN is written as null
NAN_KEYS = frozenset({"sc"})


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _json_safe(obj.item())
    return obj


def _restore(doc: dict) -> dict:
    return {k: (math.nan if v is None and k in NAN_KEYS else v) for k, v in doc.items()}


class ResultStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def run_dir(self, site: str, run_label: str) -> Path:
        return self.root / site / run_label

    @property
    def tables_dir(self) -> Path:
        return self.root / "tables"

    @property
    def plots_dir(self) -> Path:
        return self.root / "plots"

    @property
    def log_dir(self) -> Path:
        return self.root / "logs"

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    # ------------------------------------------------------------------ write

    def write_csv(self, path: str | Path, frame: pd.DataFrame) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return path

    def write_json(self, path: str | Path, payload: dict) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n")
        return path

    def write_run(self, site: str, run_label: str, trajectory: pd.DataFrame, summary: dict) -> dict[str, Path]:
        d = self.run_dir(site, run_label)
        return {
            "trajectory": self.write_csv(d / "trajectory.csv", trajectory),
            "summary": self.write_json(d / "summary.json", summary),
        }

    def write_table(self, name: str, frame: pd.DataFrame) -> Path:
        return self.write_csv(self.tables_dir / f"{name}.csv", frame)

    # ------------------------------------------------------------------- read

    def read_summary(self, site: str, run_label: str) -> dict:
        path = self.run_dir(site, run_label) / "summary.json"
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as e:
            raise LoadError(f"no results for {site}/{run_label} at {path}") from e
        return _restore(doc)

    def read_trajectory(self, site: str, run_label: str) -> pd.DataFrame:
        path = self.run_dir(site, run_label) / "trajectory.csv"
        try:
            return pd.read_csv(path, parse_dates=["timestamp"])
        except FileNotFoundError as e:
            raise LoadError(f"no trajectory for {site}/{run_label} at {path}") from e

    def summaries(self) -> list[dict]:
        """Every summary.json under the root, sorted by path."""
        out = []
        for path in sorted(self.root.glob("*/*/summary.json")):
            doc = json.loads(path.read_text())
            out.append(_restore(doc))
        return out

    @staticmethod
    def hashes(files: dict[str, Path]) -> dict[str, str]:
        return {name: hash_file(p) for name, p in sorted(files.items())}
