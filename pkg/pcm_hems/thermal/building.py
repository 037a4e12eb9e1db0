"""
Envelope parameters of the single-zone lightweight building.

Every opaque element (roof, four walls, floor) shares one layer stack. Element
resistances combine in parallel; the total opaque resistance is split into an
inner and an outer part with the accessibility factor. Fenestration is a pure
resistance in parallel with the envelope path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from pcm_hems.errors import ConfigurationError

logger = logging.getLogger(__name__)

RHO_AIR = 1.2      # kg/m3
C_AIR = 1005.0     # J/(kg K)


@dataclass(frozen=True)
class MaterialLayer:
    name: str
    thickness: float     # m
    conductivity: float  # W/(m K)
    density: float       # kg/m3
    specific_heat: float  # J/(kg K)

    def __post_init__(self):
        for attr in ("thickness", "conductivity", "density", "specific_heat"):
            value = getattr(self, attr)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"layer '{self.name}': {attr} must be > 0, got {value}")


@dataclass(frozen=True)
class FenestrationElement:
    name: str
    u_value: float  # W/(m2 K)
    area: float     # m2

    def __post_init__(self):
        if not (self.u_value > 0 and self.area > 0):
            raise ConfigurationError(f"fenestration '{self.name}': U-value and area must be > 0")


@dataclass(frozen=True)
class BuildingGeometry:
    length: float
    width: float
    height: float
    fenestration: tuple[FenestrationElement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0:
            raise ConfigurationError("building dimensions must be > 0")
        if self.fenestration_area >= self.gross_wall_area:
            raise ConfigurationError(
                f"fenestration area {self.fenestration_area:.2f} m2 exceeds wall area "
                f"{self.gross_wall_area:.2f} m2"
            )

    @property
    def floor_area(self) -> float:
        return self.length * self.width

    @property
    def volume(self) -> float:
        return self.floor_area * self.height

    @property
    def gross_wall_area(self) -> float:
        return 2.0 * (self.length + self.width) * self.height

    @property
    def fenestration_area(self) -> float:
        return sum(f.area for f in self.fenestration)

    def element_areas(self) -> dict[str, float]:
        """Opaque areas of roof, walls (net of fenestration) and floor."""
        return {
            "roof": self.floor_area,
            "walls": self.gross_wall_area - self.fenestration_area,
            "floor": self.floor_area,
        }

    def envelope_area(self, include_fenestration: bool = False) -> float:
        gross = 2.0 * self.floor_area + self.gross_wall_area
        return gross if include_fenestration else gross - self.fenestration_area


@dataclass(frozen=True)
class EnvelopeParams:
    r_in: float          # K/W
    r_out: float         # K/W
    r_dw: float          # K/W (math.inf when there is no fenestration)
    c_envelope: float    # J/K
    air_capacity: float  # J/K
    volume: float        # m3

    def __post_init__(self):
        for attr in ("r_in", "r_out", "r_dw", "c_envelope", "air_capacity", "volume"):
            if not getattr(self, attr) > 0:
                raise ConfigurationError(f"envelope parameter {attr} must be > 0")

    @property
    def r_total(self) -> float:
        return self.r_in + self.r_out


def element_resistance(layers: list[MaterialLayer], area: float) -> float:
    """Series resistance of a layer stack over one element, sum of d/(lambda A)."""
    if not area > 0:
        raise ConfigurationError(f"element area must be > 0, got {area}")
    return sum(layer.thickness / (layer.conductivity * area) for layer in layers)


def compute_envelope_params(
    geom: BuildingGeometry,
    layers: list[MaterialLayer],
    accessibility: float = 0.5,
) -> EnvelopeParams:
    if not 0.0 < accessibility < 1.0:
        raise ConfigurationError(f"accessibility must lie in (0, 1), got {accessibility}")
    if not layers:
        raise ConfigurationError("at least one material layer is required")

    conductance = 0.0
    capacity = 0.0
    for name, area in geom.element_areas().items():
        if area <= 0:
            raise ConfigurationError(f"element '{name}' has no opaque area")
        conductance += 1.0 / element_resistance(layers, area)
        capacity += sum(l.density * l.specific_heat * l.thickness * area for l in layers)

    r_total = 1.0 / conductance
    ua_fen = sum(f.u_value * f.area for f in geom.fenestration)
    r_dw = 1.0 / ua_fen if ua_fen > 0 else math.inf

    params = EnvelopeParams(
        r_in=accessibility * r_total,
        r_out=(1.0 - accessibility) * r_total,
        r_dw=r_dw,
        c_envelope=capacity,
        air_capacity=RHO_AIR * C_AIR * geom.volume,
        volume=geom.volume,
    )
    logger.debug(
        "[thermal] envelope R=%.5f K/W (in %.5f, out %.5f), R_dw=%.5f K/W, C_e=%.3e J/K",
        r_total, params.r_in, params.r_out, r_dw, capacity,
    )
    return params


def infiltration_gain(t_out, t_in, ach: float, volume: float):
    """Sensible heat carried in by outdoor air exchange, in W (array friendly)."""
    if ach < 0:
        raise ConfigurationError(f"air changes per hour must be >= 0, got {ach}")
    return ach * volume * RHO_AIR * C_AIR * (np.subtract(t_out, t_in)) / 3600.0


# ------------------------------------------------------------------
# Reference construction: lightweight Australian dwelling
# ------------------------------------------------------------------
REFERENCE_LAYERS = [
    MaterialLayer("rendered fibro-cement", 0.005, 0.25, 1150.0, 840.0),
    MaterialLayer("timber studwall with insulation batts", 0.09, 0.15, 650.0, 1200.0),
    MaterialLayer("plasterboard", 0.01, 0.25, 950.0, 840.0),
]

REFERENCE_GEOMETRY = BuildingGeometry(
    length=8.0,
    width=6.0,
    height=2.7,
    fenestration=(
        FenestrationElement("windows", 7.01, 7.8),
        FenestrationElement("door", 2.61, 2.1),
    ),
)
