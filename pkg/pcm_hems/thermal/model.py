"""
2RC lumped thermal model of the PCM building.

States: envelope node T_e (envelope + PCM capacitance) and indoor air node T_in.

    (C_e + m_pcm c_pcm(T_e)) dT_e/dt = (T_in - T_e)/R_in + (T_out - T_e)/R_out
    m_a c_a dT_in/dt = (T_out - T_in)/R_dw + (T_e - T_in)/R_in + Q_hvac + Q_inf

Integration is fixed-step RK4 with c_pcm frozen at the sub-step start. The
integrator also carries two energy accumulators: HVAC heat delivered and heat
conducted in through R_out. All arithmetic is numpy so the optimizer can push
a whole temperature grid through one call.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from pcm_hems.errors import ConfigurationError, IntegrationError
from pcm_hems.thermal.building import C_AIR, RHO_AIR, EnvelopeParams, infiltration_gain
from pcm_hems.thermal.hvac import Action, HvacSpec, slot_supply
from pcm_hems.thermal.pcm import PcmSpec, _specific_heat_unchecked

logger = logging.getLogger(__name__)

SANITY_BAND = (-20.0, 60.0)

OutdoorInput = Union[float, Callable[[float], float]]
HeatInput = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class ThermalState:
    t_envelope: float
    t_indoor: float

    def is_finite(self) -> bool:
        return math.isfinite(self.t_envelope) and math.isfinite(self.t_indoor)


@dataclass(frozen=True)
class IntegrationResult:
    t_envelope: np.ndarray
    t_indoor: np.ndarray
    hvac_heat: np.ndarray      # J delivered by the HVAC (signed)
    conducted_in: np.ndarray   # J conducted from outdoors through R_out


def integrate(
    t_envelope,
    t_indoor,
    t_out: OutdoorInput,
    q_hvac: HeatInput,
    params: EnvelopeParams,
    pcm: PcmSpec | None,
    dt: float,
    substeps: int = 30,
    ach: float = 0.5,
) -> IntegrationResult:
    """Advance the model by dt seconds; inputs may be scalars or equal-shape arrays."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    if substeps < 1:
        raise ConfigurationError(f"substeps must be >= 1, got {substeps}")
    if ach < 0:
        raise ConfigurationError(f"air changes per hour must be >= 0, got {ach}")

    te = np.array(t_envelope, dtype=float)
    ti = np.array(t_indoor, dtype=float)
    te, ti = np.broadcast_arrays(te, ti)
    te, ti = te.copy(), ti.copy()
    e_hvac = np.zeros_like(te)
    e_out = np.zeros_like(te)

    g_in = 1.0 / params.r_in
    g_out = 1.0 / params.r_out
    g_dw = 0.0 if math.isinf(params.r_dw) else 1.0 / params.r_dw
    c_air = params.air_capacity
    h = dt / substeps

    tout_fn = t_out if callable(t_out) else (lambda _s, v=float(t_out): v)
    q_fn = q_hvac if callable(q_hvac) else (lambda x, v=float(q_hvac): np.full_like(x, v))

    def rates(tau, te_, ti_, cap):
        to = tout_fn(tau)
        q = q_fn(ti_)
        flow_out = g_out * (to - te_)
        d_te = (g_in * (ti_ - te_) + flow_out) / cap
        d_ti = (g_dw * (to - ti_) + infiltration_gain(to, ti_, ach, params.volume) + g_in * (te_ - ti_) + q) / c_air
        return d_te, d_ti, q, flow_out

    for n in range(substeps):
        tau = n * h
        if pcm is None:
            cap = params.c_envelope
        else:
            cap = params.c_envelope + pcm.mass * _specific_heat_unchecked(te, pcm.melting_point)

        k1 = rates(tau, te, ti, cap)
        k2 = rates(tau + h / 2, te + h / 2 * k1[0], ti + h / 2 * k1[1], cap)
        k3 = rates(tau + h / 2, te + h / 2 * k2[0], ti + h / 2 * k2[1], cap)
        k4 = rates(tau + h, te + h * k3[0], ti + h * k3[1], cap)

        te = te + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        ti = ti + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        e_hvac = e_hvac + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        e_out = e_out + h / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])

        if not (np.all(np.isfinite(te)) and np.all(np.isfinite(ti))):
            raise IntegrationError("non-finite thermal state", step_index=n)

    return IntegrationResult(te, ti, e_hvac, e_out)


def step(
    state: ThermalState,
    t_out: OutdoorInput,
    q_hvac: HeatInput,
    params: EnvelopeParams,
    pcm: PcmSpec | None,
    dt: float,
    substeps: int = 30,
    ach: float = 0.5,
) -> ThermalState:
    """One step of the scalar model; raises IntegrationError on leaving the sanity band."""
    res = integrate(state.t_envelope, state.t_indoor, t_out, q_hvac, params, pcm, dt, substeps, ach)
    nxt = ThermalState(float(res.t_envelope), float(res.t_indoor))
    lo, hi = SANITY_BAND
    if not (lo < nxt.t_envelope < hi and lo < nxt.t_indoor < hi):
        raise IntegrationError(
            f"thermal state left sanity band: T_e={nxt.t_envelope:.2f}, T_in={nxt.t_indoor:.2f}",
            step_index=substeps - 1,
        )
    return nxt


def linear_outdoor(t_start, t_end, dt: float) -> Callable[[float], np.ndarray]:
    """Outdoor temperature interpolated across one slot (scalars or per-cell arrays)."""
    start = np.asarray(t_start, dtype=float)
    slope = (np.asarray(t_end, dtype=float) - start) / dt
    return lambda s: start + slope * s


@dataclass(frozen=True)
class SlotOutcome:
    t_envelope: np.ndarray
    t_indoor: np.ndarray
    on_fraction: np.ndarray


@dataclass(frozen=True)
class BuildingModel:
    """Envelope, optional PCM and HVAC bundled with the integration settings."""

    params: EnvelopeParams
    hvac: HvacSpec
    pcm: PcmSpec | None = None
    ach: float = 0.5
    slot_seconds: float = 1800.0
    substeps: int = 30

    def with_pcm(self, pcm: PcmSpec | None) -> "BuildingModel":
        return BuildingModel(self.params, self.hvac, pcm, self.ach, self.slot_seconds, self.substeps)

    def slot(self, t_envelope, t_indoor, action: Action, t_out_start, t_out_end,
             substeps: int | None = None) -> SlotOutcome:
        """Hold one action for a slot; returns end temperatures and the HVAC on-fraction."""
        res = integrate(
            t_envelope, t_indoor,
            linear_outdoor(t_out_start, t_out_end, self.slot_seconds),
            slot_supply(self.hvac, action),
            self.params, self.pcm, self.slot_seconds,
            substeps or self.substeps, self.ach,
        )
        if self.hvac.supply_limit:
            full = self.hvac.thermal_rating_w * self.slot_seconds
            on_fraction = np.clip(np.abs(res.hvac_heat) / full, 0.0, 1.0)
        else:
            on_fraction = np.full_like(res.t_indoor, 0.0 if action is Action.OFF else 1.0)
        return SlotOutcome(res.t_envelope, res.t_indoor, on_fraction)

    def slot_state(self, state: ThermalState, action: Action, t_out_start: float,
                   t_out_end: float) -> tuple[ThermalState, float]:
        out = self.slot(state.t_envelope, state.t_indoor, action, t_out_start, t_out_end)
        nxt = ThermalState(float(out.t_envelope), float(out.t_indoor))
        lo, hi = SANITY_BAND
        if not (lo < nxt.t_envelope < hi and lo < nxt.t_indoor < hi):
            raise IntegrationError(
                f"thermal state left sanity band: T_e={nxt.t_envelope:.2f}, T_in={nxt.t_indoor:.2f}",
                step_index=self.substeps - 1,
            )
        return nxt, float(out.on_fraction)

    def steady_state(self, t_out: float, q_hvac: float = 0.0) -> ThermalState:
        """Fixed point of the linear (constant-capacitance) system for constant inputs."""
        p = self.params
        g_in, g_out = 1.0 / p.r_in, 1.0 / p.r_out
        g_x = (0.0 if math.isinf(p.r_dw) else 1.0 / p.r_dw) + self.ach * p.volume * RHO_AIR * C_AIR / 3600.0
        a = np.array([[-(g_in + g_out), g_in], [g_in, -(g_in + g_x)]])
        b = -np.array([g_out * t_out, g_x * t_out + q_hvac])
        te, ti = np.linalg.solve(a, b)
        return ThermalState(float(te), float(ti))
