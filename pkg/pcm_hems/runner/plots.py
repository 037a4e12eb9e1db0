"""Plot-ready weekly extracts of a scenario trajectory."""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

from pcm_hems import config
from pcm_hems.data.tariff import TariffSchedule, label_series, window_boundaries
from pcm_hems.errors import SelectionError
from pcm_hems.storage.results import ResultStore

logger = logging.getLogger(__name__)

PANEL_COLUMNS = ["t_out", "t_in", "pv", "demand", "hvac"]
WEEK_SLOTS = 7 * config.SLOTS_PER_DAY


def week_frame(trajectory: pd.DataFrame, week_start, schedule: TariffSchedule) -> pd.DataFrame:
    """
    The five panel series for the 7 days from `week_start`, with the tariff
    window label and a boundary flag on slots that start a new window.
    """
    ts = pd.to_datetime(trajectory["timestamp"])
    start = pd.Timestamp(week_start)
    end = start + pd.Timedelta(seconds=WEEK_SLOTS * config.SLOT_SECONDS)
    mask = (ts >= start) & (ts < end)
    if int(mask.sum()) != WEEK_SLOTS:
        raise SelectionError(
            f"week {start:%Y-%m-%d} is not covered by the trajectory "
            f"({ts.iloc[0]:%Y-%m-%d} .. {ts.iloc[-1]:%Y-%m-%d}); {int(mask.sum())} of {WEEK_SLOTS} slots found"
        )
    week = trajectory.loc[mask].reset_index(drop=True)
    stamps = ts[mask].reset_index(drop=True)
    boundaries = set(window_boundaries(schedule))
    out = pd.DataFrame({"timestamp": stamps.dt.strftime("%Y-%m-%dT%H:%M:%S")})
    for col in PANEL_COLUMNS:
        out[col] = week[col].to_numpy()
    out["tariff_window"] = label_series(schedule, stamps)
    out["tariff_boundary"] = stamps.dt.strftime("%H:%M").isin(boundaries).astype(int)
    return out


def emit_plot_data(trajectory: pd.DataFrame, week_start, schedule: TariffSchedule,
                   path: str | Path, store: ResultStore | None = None) -> Path:
    frame = week_frame(trajectory, week_start, schedule)
    store = store or ResultStore(Path(path).parent)
    written = store.write_csv(path, frame)
    logger.info("[plots] wrote %d rows for week %s to %s", len(frame), week_start, written)
    return written


def emit_site_plots(store: ResultStore, site: str, run_labels: list[str], weeks: list[str],
                    schedule: TariffSchedule) -> list[Path]:
    """One file per (run, week) under <output>/plots/<site>/."""
    paths = []
    for label in run_labels:
        trajectory = store.read_trajectory(site, label)
        for week in weeks:
            name = f"{label}_{pd.Timestamp(week):%Y-%m-%d}.csv"
            paths.append(emit_plot_data(trajectory, week, schedule, store.plots_dir / site / name, store))
    return paths
