"""
Seeded synthetic site inputs for runs without measured data.

Weather is anchored on the 2019 dry-bulb extremes and averages of five
Australian capitals; PV follows a clear-sky bell scaled by a random daily
clearness for a 5 kW reference system; the empirical demand series uses daily
and seasonal shape multipliers and is meant as the source for fitting the
Markov chain, not as a site profile itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from pcm_hems.data.markov import calibrate_profile, fit_markov_chain, sample_profile
from pcm_hems.data.series import TimeSeries, save_series
from pcm_hems.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CityClimate:
    name: str
    t_min: float
    t_max: float
    t_mean: float
    latitude: float


CITY_PRESETS = {
    "sydney": CityClimate("sydney", 6.2, 39.3, 18.8, -33.9),
    "brisbane": CityClimate("brisbane", 7.6, 41.0, 21.6, -27.5),
    "melbourne": CityClimate("melbourne", 2.4, 43.2, 15.7, -37.8),
    "adelaide": CityClimate("adelaide", 2.3, 46.2, 17.5, -34.9),
    "perth": CityClimate("perth", 2.1, 41.8, 18.6, -31.9),
}


def city_preset(name: str) -> CityClimate:
    try:
        return CITY_PRESETS[name.lower()]
    except KeyError:
        raise ConfigurationError(f"unknown city '{name}', expected one of {sorted(CITY_PRESETS)}") from None


def _slot_clock(start: pd.Timestamp, n: int, slot_seconds: int) -> tuple[np.ndarray, np.ndarray]:
    idx = pd.date_range(start, periods=n, freq=pd.Timedelta(seconds=slot_seconds))
    hours = (idx.hour + idx.minute / 60.0).to_numpy()
    return idx.dayofyear.to_numpy(), hours


def synthetic_weather(city: CityClimate, days: int, seed: int, start="2019-01-01",
                      slot_seconds: int = 1800) -> TimeSeries:
    """Seasonal and diurnal cycles plus AR(1) weather noise, mapped onto the city's min/max."""
    rng = np.random.default_rng(seed)
    start = pd.Timestamp(start)
    n = days * 86400 // slot_seconds
    doy, hours = _slot_clock(start, n, slot_seconds)
    seasonal = np.cos(2 * np.pi * (doy - 20) / 365.0)    # warmest in late January
    diurnal = np.cos(2 * np.pi * (hours - 15.0) / 24.0)  # warmest mid-afternoon
    noise = np.empty(n)
    level = 0.0
    for k in range(n):
        level = 0.995 * level + rng.normal(0.0, 0.12)
        noise[k] = level
    shape = 6.0 * seasonal + (4.0 + 1.5 * seasonal) * diurnal + 2.0 * noise

    # piecewise-linear map: min and max land exactly, the mean approximately
    m = shape.mean()
    lo, hi = shape.min(), shape.max()
    below = city.t_mean + (shape - m) * (city.t_mean - city.t_min) / max(m - lo, 1e-9)
    above = city.t_mean + (shape - m) * (city.t_max - city.t_mean) / max(hi - m, 1e-9)
    values = np.where(shape < m, below, above)
    return TimeSeries(start, slot_seconds, values, "degC", f"{city.name}_weather")


def synthetic_pv(city: CityClimate, days: int, seed: int, capacity_kw: float = 5.0,
                 start="2019-01-01", slot_seconds: int = 1800) -> TimeSeries:
    """kWh per slot from a sine-bell day whose length follows the latitude."""
    if not capacity_kw > 0:
        raise ConfigurationError("PV capacity must be > 0")
    rng = np.random.default_rng(seed)
    start = pd.Timestamp(start)
    n = days * 86400 // slot_seconds
    doy, hours = _slot_clock(start, n, slot_seconds)
    mid = hours + slot_seconds / 7200.0
    swing = 2.0 + 4.0 * abs(city.latitude) / 90.0
    day_length = 12.0 + swing * np.cos(2 * np.pi * (doy - 355) / 365.0)  # longest near the December solstice
    sunrise = 12.0 - day_length / 2
    bell = np.clip(np.sin(np.pi * (mid - sunrise) / day_length), 0.0, None)
    bell[(mid < sunrise) | (mid > sunrise + day_length)] = 0.0
    clearness = rng.beta(5.0, 1.8, size=days + 1)[np.arange(n) // (86400 // slot_seconds)]
    values = capacity_kw * 0.8 * bell * clearness * slot_seconds / 3600.0
    return TimeSeries(start, slot_seconds, values, "kWh/slot", f"{city.name}_pv")


def _daily_shape(hour: np.ndarray) -> np.ndarray:
    return np.select(
        [(hour >= 6) & (hour < 9), (hour >= 9) & (hour < 17), (hour >= 17) & (hour < 22)],
        [1.15, 1.0, 1.25], 0.75,
    )


def _seasonal_shape(month: np.ndarray) -> np.ndarray:
    return np.select([np.isin(month, [6, 7, 8]), np.isin(month, [12, 1, 2])], [1.2, 1.05], 1.0)


def synthetic_empirical_demand(days: int, seed: int, annual_kwh: float = 4700.0, start="2019-01-01",
                               slot_seconds: int = 1800) -> TimeSeries:
    rng = np.random.default_rng(seed)
    start = pd.Timestamp(start)
    idx = pd.date_range(start, periods=days * 86400 // slot_seconds, freq=pd.Timedelta(seconds=slot_seconds))
    hour = (idx.hour + idx.minute / 60.0).to_numpy()
    day_var = rng.normal(1.0, 0.10, size=days + 1)
    day = ((idx - start.normalize()).days).to_numpy()
    raw = (_daily_shape(hour) * _seasonal_shape(idx.month.to_numpy()) * day_var[day]
           * rng.lognormal(0.0, 0.35, size=len(idx)))
    series = TimeSeries(start, slot_seconds, np.clip(raw, 0.0, None), "kWh/slot", "empirical_demand")
    return calibrate_profile(series, annual_kwh)


@dataclass(frozen=True)
class SiteInputs:
    site: str
    weather: TimeSeries
    pv: TimeSeries
    demand: TimeSeries

    def write(self, directory: str | Path) -> dict[str, Path]:
        d = Path(directory) / self.site
        return {
            "weather": save_series(self.weather, d / "weather.csv"),
            "pv": save_series(self.pv, d / "pv.csv"),
            "demand": save_series(self.demand, d / "demand.csv"),
        }


def synthesize_site(site: str, city: str, days: int, seed: int, pv_kw: float = 5.0,
                    annual_kwh: float = 4700.0, bins: int = 10, start="2019-01-01") -> SiteInputs:
    """Weather, PV and Markov-sampled demand for one site."""
    climate = city_preset(city)
    # generated over at least a year so short windows keep realistic extremes
    weather = synthetic_weather(climate, max(days, 365), seed, start)
    weather = weather.slice(0, days * weather.slots_per_day)
    pv = synthetic_pv(climate, days, seed + 1, pv_kw, start)
    empirical = synthetic_empirical_demand(max(days, 365), seed + 2, annual_kwh, start)
    chain = fit_markov_chain(empirical, bins)
    demand = calibrate_profile(sample_profile(chain, days, seed + 3, start), annual_kwh)
    logger.info("[data] synthesized %d days for site %s (%s)", days, site, climate.name)
    return SiteInputs(site, weather, pv, demand)
