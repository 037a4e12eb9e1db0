"""
Phase change material physics: specific heat curve, enthalpy and state of charge.

The specific heat is a two-branch curve peaking at the melting point: an
exponential rise with a 1.5 K width below T_p and a narrow Gaussian-like decay
above it. Both branches meet at 20000 J/(kg K).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from pcm_hems.errors import ConfigurationError, DomainError
from pcm_hems.thermal.building import BuildingGeometry

J_PER_KWH = 3.6e6

# Mass tolerance for the rho * d * area consistency check
MASS_TOLERANCE = 0.01


@dataclass(frozen=True)
class PcmSpec:
    label: str
    melting_point: float   # C
    layer_thickness: float  # m
    conductivity: float    # W/(m K)
    density: float         # kg/m3
    mass: float            # kg

    def __post_init__(self):
        if not math.isfinite(self.melting_point):
            raise ConfigurationError(f"PCM '{self.label}': melting point must be finite")
        for attr in ("layer_thickness", "conductivity", "density", "mass"):
            if not getattr(self, attr) > 0:
                raise ConfigurationError(f"PCM '{self.label}': {attr} must be > 0")


def derive_pcm_mass(
    geom: BuildingGeometry,
    density: float,
    layer_thickness: float,
    include_fenestration: bool = True,
) -> float:
    """Mass of a PCM layer lining roof, walls and floor."""
    return density * layer_thickness * geom.envelope_area(include_fenestration)


def check_pcm_mass(spec: PcmSpec, geom: BuildingGeometry, include_fenestration: bool = True) -> None:
    expected = derive_pcm_mass(geom, spec.density, spec.layer_thickness, include_fenestration)
    if abs(spec.mass - expected) > MASS_TOLERANCE * expected:
        raise ConfigurationError(
            f"PCM '{spec.label}': mass {spec.mass:.1f} kg inconsistent with "
            f"rho*d*area = {expected:.1f} kg"
        )


def pcm_specific_heat(t, spec: PcmSpec):
    """c_pcm(T) in J/(kg K); accepts scalars or numpy arrays."""
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise DomainError("PCM temperature must be finite")
    delta = spec.melting_point - t_arr
    below = 1200.0 + 18800.0 * np.exp(-np.maximum(delta, 0.0) / 1.5)
    above = 1300.0 + 18700.0 * np.exp(-4.0 * delta ** 2)
    out = np.where(t_arr < spec.melting_point, below, above)
    return float(out) if out.ndim == 0 else out


def _specific_heat_unchecked(t: np.ndarray, t_p: float) -> np.ndarray:
    # Hot path for the integrator: no finiteness check, arrays only.
    delta = t_p - t
    return np.where(
        t < t_p,
        1200.0 + 18800.0 * np.exp(-np.maximum(delta, 0.0) / 1.5),
        1300.0 + 18700.0 * np.exp(-4.0 * delta * delta),
    )


def pcm_enthalpy_delta(t1: float, t2: float, spec: PcmSpec) -> float:
    """Heat stored between t1 and t2 in joules; negative when released."""
    if not (math.isfinite(t1) and math.isfinite(t2)):
        raise DomainError("enthalpy bounds must be finite")
    if t1 == t2:
        return 0.0
    lo, hi = min(t1, t2), max(t1, t2)
    points = [spec.melting_point] if lo < spec.melting_point < hi else None
    value, _ = quad(
        lambda x: float(pcm_specific_heat(x, spec)),
        lo, hi, points=points, epsabs=1e-6, epsrel=1e-10, limit=200,
    )
    sign = 1.0 if t2 > t1 else -1.0
    return sign * spec.mass * value


def pcm_soc(t: float, t_ref: float, spec: PcmSpec, cop: float) -> float:
    """Stored heat relative to t_ref as HVAC electrical-equivalent kWh."""
    if not cop > 0:
        raise ConfigurationError(f"COP must be > 0, got {cop}")
    return pcm_enthalpy_delta(t_ref, t, spec) / cop / J_PER_KWH


def pcm_soc_series(t_envelope: np.ndarray, t_ref: float, spec: PcmSpec, cop: float) -> np.ndarray:
    """
    SOC along a trajectory using one cumulative table instead of one quadrature per row.

    The table spans the trajectory range at 0.01 K; linear interpolation on a
    cumulative trapezoid of c_pcm is accurate to well under 1 Wh here.
    """
    t_envelope = np.asarray(t_envelope, dtype=float)
    if t_envelope.size == 0:
        return t_envelope.copy()
    lo = min(float(t_envelope.min()), t_ref) - 0.05
    hi = max(float(t_envelope.max()), t_ref) + 0.05
    grid = np.linspace(lo, hi, max(2, int(math.ceil((hi - lo) / 0.01)) + 1))
    c = pcm_specific_heat(grid, spec)
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (c[1:] + c[:-1]) * np.diff(grid))])
    h = np.interp(t_envelope, grid, cumulative) - np.interp(t_ref, grid, cumulative)
    return spec.mass * h / cop / J_PER_KWH


REFERENCE_PCM_MASS = 2806.0


def reference_pcm(melting_point: float = 21.0, label: str | None = None) -> PcmSpec:
    """Honeycomb PCM lining the reference building (MT21 / MT23)."""
    return PcmSpec(
        label=label or f"MT{melting_point:g}",
        melting_point=melting_point,
        layer_thickness=0.03,
        conductivity=2.8,
        density=545.0,
        mass=REFERENCE_PCM_MASS,
    )
