import logging

import numpy as np
import pytest

from pcm_hems.data import synthesize_site
from pcm_hems.models import ProjectConfig, SiteSettings, SolverSettings
from pcm_hems.optimizer import SlotData
from pcm_hems.thermal import HvacSpec, reference_building, reference_pcm


@pytest.fixture(autouse=True)
def package_logger():
    """Undo configure_logging so caplog sees package records in every test."""
    yield
    logger = logging.getLogger("pcm_hems")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


@pytest.fixture
def building():
    return reference_building()


@pytest.fixture
def pcm_building():
    return reference_building(reference_pcm(21.0))


@pytest.fixture
def limited_building():
    """The reference building with the supply-limited heat pump."""
    return reference_building(hvac=HvacSpec(4.0, 4.5, supply_limit=True))


@pytest.fixture
def winter_day():
    """One cold day: 48 slots with a 4-14 C outdoor swing, a small PV bell and flat demand."""
    k = np.arange(48)
    t_out = 9.0 + 5.0 * np.cos(2 * np.pi * (k / 2.0 - 15.0) / 24.0)
    pv = np.clip(np.sin(np.pi * (k - 14) / 20.0), 0.0, None) * 1.2
    pv[(k < 14) | (k > 34)] = 0.0
    demand = np.full(48, 0.25)
    price = np.where((k >= 29) & (k < 41), 0.50, np.where((k >= 15) & (k < 45), 0.24, 0.16))
    return SlotData(t_out=t_out, pv=pv, demand=demand, price=price, feed_in=0.09, t_out_final=t_out[0])


def make_project(tmp_path, sites=(("syd", "sydney"),), days=1, start="2019-07-01", **overrides) -> ProjectConfig:
    """A small project with synthetic inputs written under tmp_path/data."""
    data_dir = tmp_path / "data"
    for i, (name, city) in enumerate(sites):
        synthesize_site(name, city, days + 1, seed=100 + i, start=start).write(data_dir)
    solver = overrides.pop("solver", SolverSettings(resolution=0.5, lookahead_days=0))
    return ProjectConfig(
        sites=[SiteSettings(name=n, city=c) for n, c in sites],
        horizon={"start": start, "days": days},
        solver=solver,
        output_dir=str(tmp_path / "results"),
        **overrides,
    )


@pytest.fixture
def small_project(tmp_path):
    return make_project(tmp_path)


@pytest.fixture
def project_factory(tmp_path):
    def factory(**kwargs) -> ProjectConfig:
        return make_project(tmp_path, **kwargs)

    return factory
