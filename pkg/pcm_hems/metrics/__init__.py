from pcm_hems.metrics.economics import (
    CostSaving,
    ScenarioResult,
    annual_cost,
    cost_by_window,
    cost_saving,
    self_consumption,
)
from pcm_hems.metrics.stats import SummaryStats, histogram, summarize
