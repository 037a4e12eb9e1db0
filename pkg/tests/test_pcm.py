import math

import numpy as np
import pytest

from pcm_hems.errors import ConfigurationError, DomainError
from pcm_hems.thermal import (
    REFERENCE_GEOMETRY,
    PcmSpec,
    derive_pcm_mass,
    pcm_enthalpy_delta,
    pcm_soc,
    pcm_specific_heat,
    reference_pcm,
)
from pcm_hems.thermal.pcm import J_PER_KWH, check_pcm_mass, pcm_soc_series


@pytest.fixture
def mt21():
    return reference_pcm(21.0)


class TestSpecificHeat:
    def test_peak_at_melting_point(self, mt21):
        assert pcm_specific_heat(21.0, mt21) == pytest.approx(20000.0)

    def test_continuous_across_melting_point(self, mt21):
        just_below = math.nextafter(21.0, -math.inf)
        assert pcm_specific_heat(just_below, mt21) == pytest.approx(20000.0, abs=1e-9)

    def test_asymmetric_branches(self, mt21):
        below = pcm_specific_heat(20.0, mt21)
        above = pcm_specific_heat(22.0, mt21)
        assert below == pytest.approx(1200.0 + 18800.0 * math.exp(-1.0 / 1.5))
        assert above == pytest.approx(1300.0 + 18700.0 * math.exp(-4.0))
        assert below > above

    def test_tends_to_sensible_heat_far_from_melting(self, mt21):
        assert pcm_specific_heat(0.0, mt21) == pytest.approx(1200.0, abs=0.05)
        assert pcm_specific_heat(40.0, mt21) == pytest.approx(1300.0, abs=1e-9)

    def test_array_input(self, mt21):
        values = pcm_specific_heat(np.array([15.0, 21.0, 25.0]), mt21)
        assert isinstance(values, np.ndarray)
        assert values[1] == pytest.approx(20000.0)

    def test_rejects_nan(self, mt21):
        with pytest.raises(DomainError):
            pcm_specific_heat(float("nan"), mt21)
        with pytest.raises(DomainError):
            pcm_specific_heat(np.array([20.0, np.inf]), mt21)


class TestEnthalpy:
    def test_15_to_25_c_stores_37_7_kwh(self, mt21):
        # the curve integrates to 48.37 kJ/kg over 15-25 C, x 2806 kg = 37.7 kWh;
        # "almost 40 kWh" is accepted as the band [37.5, 40]
        kwh = pcm_enthalpy_delta(15.0, 25.0, mt21) / J_PER_KWH
        assert kwh == pytest.approx(37.70, abs=0.01)
        assert 37.5 <= kwh <= 40.0

    @pytest.mark.parametrize("t1,t2,t3", [(15.0, 21.0, 25.0), (18.0, 20.5, 22.3), (16.0, 23.0, 30.0)])
    def test_additive_over_adjacent_intervals(self, mt21, t1, t2, t3):
        whole = pcm_enthalpy_delta(t1, t3, mt21)
        parts = pcm_enthalpy_delta(t1, t2, mt21) + pcm_enthalpy_delta(t2, t3, mt21)
        assert parts == pytest.approx(whole, rel=1e-8)

    def test_monotone_in_the_upper_bound(self, mt21):
        uppers = np.linspace(10.0, 35.0, 101)
        stored = [pcm_enthalpy_delta(10.0, float(t), mt21) for t in uppers]
        assert np.all(np.diff(stored) > 0)

    def test_comfort_band_storage_and_soc(self, mt21):
        kwh = pcm_enthalpy_delta(20.0, 24.0, mt21) / J_PER_KWH
        assert 19.95 <= kwh <= 22.05
        assert 4.5 <= pcm_soc(24.0, 20.0, mt21, cop=4.5) <= 5.5

    def test_sign_follows_direction(self, mt21):
        up = pcm_enthalpy_delta(18.0, 23.0, mt21)
        assert up > 0
        assert pcm_enthalpy_delta(23.0, 18.0, mt21) == pytest.approx(-up)
        assert pcm_enthalpy_delta(19.0, 19.0, mt21) == 0.0

    def test_rejects_nan_bounds(self, mt21):
        with pytest.raises(DomainError):
            pcm_enthalpy_delta(float("nan"), 20.0, mt21)

    def test_soc_requires_positive_cop(self, mt21):
        with pytest.raises(ConfigurationError, match="COP"):
            pcm_soc(22.0, 20.0, mt21, cop=0.0)

    def test_soc_series_matches_quadrature(self, mt21):
        temps = np.array([17.3, 19.9, 20.0, 21.0, 22.6, 24.8])
        series = pcm_soc_series(temps, 20.0, mt21, 4.5)
        for t, soc in zip(temps, series):
            assert soc == pytest.approx(pcm_soc(float(t), 20.0, mt21, 4.5), abs=1e-3)
        assert series[2] == pytest.approx(0.0, abs=1e-9)

    def test_soc_series_empty(self, mt21):
        assert pcm_soc_series(np.array([]), 20.0, mt21, 4.5).size == 0


class TestPcmMass:
    def test_reference_mass_matches_layer(self, mt21):
        derived = derive_pcm_mass(REFERENCE_GEOMETRY, 545.0, 0.03)
        assert derived == pytest.approx(545.0 * 0.03 * 171.6)
        assert mt21.mass == pytest.approx(derived, rel=0.01)
        check_pcm_mass(mt21, REFERENCE_GEOMETRY)

    def test_inconsistent_mass(self):
        heavy = PcmSpec("heavy", 21.0, 0.03, 2.8, 545.0, 3500.0)
        with pytest.raises(ConfigurationError, match="inconsistent"):
            check_pcm_mass(heavy, REFERENCE_GEOMETRY)

    def test_invalid_spec(self):
        with pytest.raises(ConfigurationError, match="mass"):
            PcmSpec("empty", 21.0, 0.03, 2.8, 545.0, 0.0)

    def test_reference_labels(self):
        assert reference_pcm(23.0).label == "MT23"
        assert reference_pcm(21.0, label="custom").label == "custom"
