"""
Command-line entry point.

    python -m pcm_hems.main run --config config/example.json --data-dir data --workers 4
    python -m pcm_hems.main compare --config config/example.json
    python -m pcm_hems.main sweep-melting-point --labels MT21 MT23
    python -m pcm_hems.main train-surrogate --pcm-label MT21
    python -m pcm_hems.main synth-inputs --site syd:sydney --site mel:melbourne
    python -m pcm_hems.main synth-demand --days 365 --out data/demand.csv
    python -m pcm_hems.main emit-plots --site syd --weeks 2019-01-14 2019-07-15
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from pcm_hems import __version__, config
from pcm_hems.coordinator import run_project
from pcm_hems.data import (
    calibrate_profile,
    fit_markov_chain,
    load_series,
    sample_profile,
    save_series,
    synthesize_site,
    synthetic_empirical_demand,
)
from pcm_hems.errors import ConfigurationError, PcmHemsError
from pcm_hems.models import ProjectConfig, load_config
from pcm_hems.runner import compare_scenarios, emit_site_plots, melting_point_sweep, scenario_table
from pcm_hems.runner.surrogates import build_surrogate, weather_corpus
from pcm_hems.storage import ResultStore
from pcm_hems.utils.log_setup import configure_logging

logger = logging.getLogger("pcm_hems.main")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _project(args) -> ProjectConfig:
    project = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        project = project.model_copy(update={"seed": args.seed})
    return project


def _output_dir(args, project: ProjectConfig) -> Path:
    return Path(args.output_dir or project.output_dir)


def _data_dir(args) -> Path:
    return Path(args.data_dir or config.DATA_DIR)


# ----------------------------
# Subcommands
# ----------------------------
def cmd_run(args) -> int:
    project = _project(args)
    manifest = run_project(
        project, _data_dir(args), _output_dir(args, project), workers=args.workers,
        sites=args.sites, scenarios=args.scenarios,
        pcm_labels=[args.pcm_label] if args.pcm_label else None,
        pv_scalings=args.pv_scalings, log_level=args.log_level,
    )
    if manifest.failed:
        logger.error("[main] failed sites: %s", ", ".join(manifest.failed))
        return EXIT_FAILED
    return EXIT_OK


def cmd_compare(args) -> int:
    project = _project(args)
    store = ResultStore(_output_dir(args, project))
    summaries = store.summaries()
    if not summaries:
        raise ConfigurationError(f"no results under {store.root}; run the scenarios first")
    for scaling in args.pv_scalings or project.pv_scalings:
        comparison = compare_scenarios(summaries, args.baseline or project.baseline, args.variant,
                                       scaling, args.pcm_label or project.pcm_label)
        for name, path in comparison.write(store).items():
            logger.info("[main] %s -> %s", name, path)
        store.write_table(f"scenarios_pv{scaling:g}", scenario_table(summaries, scaling))
    return EXIT_OK


def cmd_sweep(args) -> int:
    project = _project(args)
    labels = args.labels or sorted(project.pcm)
    baseline = args.baseline or project.baseline
    output = _output_dir(args, project)
    manifest = run_project(
        project, _data_dir(args), output, workers=args.workers, sites=args.sites,
        scenarios=[baseline, "HEMS-PCM"], pcm_labels=labels, pv_scalings=args.pv_scalings,
        log_level=args.log_level,
    )
    store = ResultStore(output)
    table = melting_point_sweep(store.summaries(), labels, args.pv_scalings or project.pv_scalings, baseline)
    logger.info("[main] melting-point sweep -> %s", store.write_table("melting_point_sweep", table))
    return EXIT_FAILED if manifest.failed else EXIT_OK


def cmd_train_surrogate(args) -> int:
    project = _project(args)
    data_dir = _data_dir(args)
    sites = [s for s in project.sites if not args.sites or s.name in args.sites]
    if not sites:
        raise ConfigurationError("no sites to take weather from")
    weather = [load_series(s.paths(data_dir)["weather"], "degC", config.SLOT_SECONDS, f"{s.name}/weather")
               for s in sites]
    labels = [None] if args.no_pcm else (args.pcm_label or [project.pcm_label])
    for label in labels:
        build_surrogate(project, weather_corpus(weather), label, directory=args.model_dir)
    return EXIT_OK


def cmd_synth_inputs(args) -> int:
    project = _project(args)
    if args.site:
        pairs = [tuple(s.split(":", 1)) if ":" in s else (s, s) for s in args.site]
    else:
        pairs = [(s.name, s.city or s.name) for s in project.sites]
    if not pairs:
        raise ConfigurationError("no sites given; pass --site NAME:CITY or configure sites")
    days = args.days or project.horizon.days
    # one extra day supplies the final outdoor boundary value of the horizon
    for i, (site, city) in enumerate(pairs):
        inputs = synthesize_site(site, city, days + 1, project.seed + i, pv_kw=args.pv_kw,
                                 annual_kwh=args.annual_kwh, start=project.horizon.start)
        files = inputs.write(_data_dir(args))
        logger.info("[main] %s (%s): %s", site, city, ", ".join(str(p) for p in files.values()))
    return EXIT_OK


def cmd_synth_demand(args) -> int:
    seed = config.SEED if args.seed is None else args.seed
    if args.source:
        empirical = load_series(args.source, "kWh/slot", config.SLOT_SECONDS, "empirical_demand")
    else:
        empirical = synthetic_empirical_demand(args.days, seed, args.annual_kwh)
    chain = fit_markov_chain(empirical, bins=args.bins)
    profile = calibrate_profile(sample_profile(chain, args.days, seed + 1, start=args.start), args.annual_kwh)
    logger.info("[main] demand profile -> %s (%.0f kWh)", save_series(profile, args.out), profile.total())
    return EXIT_OK


def cmd_emit_plots(args) -> int:
    project = _project(args)
    store = ResultStore(_output_dir(args, project))
    site_dir = store.root / args.site
    if not args.runs and not site_dir.is_dir():
        raise ConfigurationError(f"no results for site '{args.site}' under {store.root}")
    runs = args.runs or sorted(p.name for p in site_dir.iterdir() if p.is_dir())
    paths = emit_site_plots(store, args.site, runs, args.weeks, project.tariff.schedule())
    logger.info("[main] wrote %d plot files", len(paths))
    return EXIT_OK


# ----------------------------
# Parser
# ----------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="project config JSON (defaults apply when omitted)")
    common.add_argument("--data-dir", help=f"site input directory (default {config.DATA_DIR})")
    common.add_argument("--output-dir", help="result directory (default from config)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--log-level", default=config.LOG_LEVEL)

    parser = argparse.ArgumentParser(
        prog="pcm-hems", description="Thermal simulation and HVAC scheduling for PCM-insulated homes with PV.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def runs(p):
        p.add_argument("--workers", type=int, default=config.WORKERS, help="site worker processes")
        p.add_argument("--sites", nargs="+", help="subset of configured sites")
        p.add_argument("--pv-scalings", nargs="+", type=float)

    p = sub.add_parser("run", parents=[common], help="run the scenarios for every site")
    runs(p)
    p.add_argument("--scenarios", nargs="+", choices=["DB", "DB-PCM", "HEMS", "HEMS-PCM"])
    p.add_argument("--pcm-label")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", parents=[common], help="cost-saving and SC tables from finished runs")
    p.add_argument("--baseline")
    p.add_argument("--variant", default="HEMS-PCM")
    p.add_argument("--pcm-label")
    p.add_argument("--pv-scalings", nargs="+", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-melting-point", parents=[common], help="HEMS-PCM per melting point")
    runs(p)
    p.add_argument("--labels", nargs="+")
    p.add_argument("--baseline")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train-surrogate", parents=[common], help="fit and validate the transition surrogate")
    p.add_argument("--pcm-label", nargs="+")
    p.add_argument("--no-pcm", action="store_true", help="train the PCM-free building instead")
    p.add_argument("--sites", nargs="+", help="sites whose weather forms the corpus")
    p.add_argument("--model-dir", help="output directory (default from config)")
    p.set_defaults(func=cmd_train_surrogate)

    p = sub.add_parser("synth-inputs", parents=[common], help="write synthetic weather, PV and demand")
    p.add_argument("--site", action="append", help="NAME:CITY, repeatable")
    p.add_argument("--days", type=int)
    p.add_argument("--pv-kw", type=float, default=5.0)
    p.add_argument("--annual-kwh", type=float, default=4700.0)
    p.set_defaults(func=cmd_synth_inputs)

    p = sub.add_parser("synth-demand", parents=[common], help="sample a Markov-chain demand profile")
    p.add_argument("--out", required=True)
    p.add_argument("--source", help="empirical demand CSV to fit (synthetic when omitted)")
    p.add_argument("--days", type=int, default=365)
    p.add_argument("--start", default="2019-01-01")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--annual-kwh", type=float, default=4700.0)
    p.set_defaults(func=cmd_synth_demand)

    p = sub.add_parser("emit-plots", parents=[common], help="weekly plot-ready extracts")
    p.add_argument("--site", required=True)
    p.add_argument("--runs", nargs="+", help="run labels (default: all runs of the site)")
    p.add_argument("--weeks", nargs="+", required=True, help="week start dates, e.g. 2019-01-14")
    p.set_defaults(func=cmd_emit_plots)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except ConfigurationError as e:
        logger.error("[main] configuration error: %s", e)
        return EXIT_CONFIG
    except PcmHemsError as e:
        logger.error("[main] %s: %s", type(e).__name__, e)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
