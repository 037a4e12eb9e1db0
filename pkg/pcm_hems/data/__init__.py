from pcm_hems.data.markov import (
    DemandMarkovModel,
    calibrate_profile,
    fit_markov_chain,
    sample_profile,
    sample_profiles,
)
from pcm_hems.data.series import TimeSeries, load_series, save_series
from pcm_hems.data.synthetic import (
    CITY_PRESETS,
    SiteInputs,
    city_preset,
    synthesize_site,
    synthetic_empirical_demand,
    synthetic_pv,
    synthetic_weather,
)
from pcm_hems.data.tariff import (
    DEFAULT_TARIFF,
    TariffSchedule,
    TariffWindow,
    label_series,
    price_series,
    tariff_price,
    window_boundaries,
    window_label,
)
