from pcm_hems.runner.compare import Comparison, compare_scenarios, melting_point_sweep, scenario_table
from pcm_hems.runner.plots import emit_plot_data, emit_site_plots, week_frame
from pcm_hems.runner.scenarios import (
    LoadedSurrogate,
    ScenarioRun,
    SiteData,
    load_site,
    load_surrogate,
    run_deadband,
    run_hems,
    run_scenario,
)
