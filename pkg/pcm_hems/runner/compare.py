"""
Cross-scenario tables built from the per-run summary files.

All functions take summary dicts (as written by `run_scenario` and read back by
`ResultStore.summaries`) so aggregates are always computed from what is on disk.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import pandas as pd

from pcm_hems.errors import ConfigurationError, UndefinedMetricError
from pcm_hems.metrics import cost_saving, histogram, summarize
from pcm_hems.models import SCENARIOS
from pcm_hems.storage.results import ResultStore

logger = logging.getLogger(__name__)

ALL_GROUPS = "all"
METRICS = ("saving", "saving_pct", "sc_reduction")


def pick(summaries: list[dict], scenario: str, pv_scaling: float,
         pcm_label: str | None = None) -> dict[str, dict]:
    """site -> summary for one scenario at one PV scaling."""
    with_pcm = SCENARIOS.get(scenario, ("", False))[1]
    out: dict[str, dict] = {}
    for s in summaries:
        if s["scenario"] != scenario or s["pv_scaling"] != pv_scaling:
            continue
        if with_pcm and pcm_label is not None and s.get("pcm_label") != pcm_label:
            continue
        if s["site"] in out:
            raise ConfigurationError(
                f"several {scenario} results for site '{s['site']}' at pv x{pv_scaling:g}; select a PCM label"
            )
        out[s["site"]] = s
    return out


@dataclass
class Comparison:
    baseline: str
    variant: str
    pv_scaling: float
    sites: pd.DataFrame
    groups: pd.DataFrame
    histograms: dict[str, pd.DataFrame] = field(default_factory=dict)

    def write(self, store: ResultStore, name: str | None = None) -> dict[str, str]:
        name = name or f"compare_{self.baseline}_vs_{self.variant}_pv{self.pv_scaling:g}"
        files = {
            "sites": store.write_table(f"{name}_sites", self.sites),
            "groups": store.write_table(f"{name}_groups", self.groups),
        }
        for metric, frame in self.histograms.items():
            files[f"hist_{metric}"] = store.write_table(f"{name}_hist_{metric}", frame)
        return {k: str(v) for k, v in files.items()}


def _site_row(site: str, base: dict | None, variant: dict | None) -> dict:
    row = {"site": site, "group": (base or variant or {}).get("group", site)}
    if base is None or variant is None:
        row.update({"base_cost": math.nan, "variant_cost": math.nan, "saving": math.nan,
                    "saving_pct": math.nan, "base_sc": math.nan, "variant_sc": math.nan,
                    "sc_reduction": math.nan, "missing": True})
        return row
    saving = cost_saving(base["cost"], variant["cost"])
    row.update({
        "base_cost": base["cost"],
        "variant_cost": variant["cost"],
        "saving": saving.absolute,
        "saving_pct": saving.percent,
        "base_sc": base["sc"],
        "variant_sc": variant["sc"],
        # percentage points
        "sc_reduction": base["sc"] - variant["sc"],
        "missing": False,
    })
    return row


def _group_stats(frame: pd.DataFrame, group: str) -> dict:
    row: dict = {"group": group, "sites": int(len(frame))}
    for metric in METRICS:
        try:
            row.update(summarize(frame[metric]).to_dict(prefix=f"{metric}_"))
        except UndefinedMetricError:
            row.update({f"{metric}_mean": math.nan, f"{metric}_se": math.nan, f"{metric}_std": math.nan,
                        f"{metric}_n": 0, f"{metric}_insufficient": True,
                        f"{metric}_missing": int(len(frame))})
    return row


def compare_scenarios(summaries: list[dict], baseline: str = "HEMS", variant: str = "HEMS-PCM",
                      pv_scaling: float = 1.0, pcm_label: str | None = None, bins: int = 10) -> Comparison:
    """
    Cost-saving ($, %) and SC reduction (percentage points) of `variant` against
    `baseline` for every site, with per-group and overall summary statistics.

    Sites with only one of the two results stay in the site table as missing and
    count as missing in the statistics.
    """
    base = pick(summaries, baseline, pv_scaling, pcm_label)
    var = pick(summaries, variant, pv_scaling, pcm_label)
    sites = sorted(set(base) | set(var))
    if not sites:
        raise ConfigurationError(f"no results for {baseline} or {variant} at pv x{pv_scaling:g}")
    for site in sites:
        if site not in base or site not in var:
            logger.warning("[compare] site '%s' lacks a %s result; marked missing", site,
                           baseline if site not in base else variant)

    site_frame = pd.DataFrame([_site_row(s, base.get(s), var.get(s)) for s in sites])
    group_rows = [_group_stats(g, name) for name, g in site_frame.groupby("group", sort=True)]
    group_rows.append(_group_stats(site_frame, ALL_GROUPS))
    hists = {m: pd.DataFrame(histogram(site_frame[m], bins), columns=["lo", "hi", "count"])
             for m in ("saving_pct", "sc_reduction")}
    return Comparison(baseline, variant, pv_scaling, site_frame, pd.DataFrame(group_rows), hists)


def scenario_table(summaries: list[dict], pv_scaling: float = 1.0,
                   scenarios: tuple[str, ...] = tuple(SCENARIOS)) -> pd.DataFrame:
    """One row per site: PV and demand totals, then HVAC kWh, SC and cost per scenario."""
    rows: dict[str, dict] = {}
    for name in scenarios:
        for site, s in sorted(pick(summaries, name, pv_scaling).items()):
            row = rows.setdefault(site, {"site": site, "group": s.get("group", site),
                                         "pv_kwh": s["pv_kwh"], "demand_kwh": s["demand_kwh"]})
            row[f"{name}_hvac_kwh"] = s["hvac_kwh"]
            row[f"{name}_sc"] = s["sc"]
            row[f"{name}_cost"] = s["cost"]
            row[f"{name}_transitions"] = s["hvac_transitions"]
    return pd.DataFrame([rows[k] for k in sorted(rows)])


def melting_point_sweep(summaries: list[dict], labels: list[str], pv_scalings: list[float],
                        baseline: str = "HEMS", variant: str = "HEMS-PCM") -> pd.DataFrame:
    """
    HEMS-PCM against the baseline per melting-point variant, side by side.

    Rows are (group, pv_scaling); each label contributes mean and SE columns of
    cost-saving and SC reduction.
    """
    frames = []
    for scaling in pv_scalings:
        merged: pd.DataFrame | None = None
        for label in labels:
            groups = compare_scenarios(summaries, baseline, variant, scaling, label).groups
            cols = {f"{m}_{s}": f"{label}_{m}_{s}" for m in METRICS for s in ("mean", "se")}
            part = groups[["group", "sites", *cols]].rename(columns=cols)
            merged = part if merged is None else merged.merge(part.drop(columns="sites"), on="group")
        merged.insert(1, "pv_scaling", scaling)
        frames.append(merged)
    return pd.concat(frames, ignore_index=True)
