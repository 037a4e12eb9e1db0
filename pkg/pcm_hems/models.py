"""
Schemas for the project config file, per-scenario settings and the run manifest.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from pcm_hems import config
from pcm_hems.control.deadband import DeadbandConfig
from pcm_hems.data.tariff import DEFAULT_TARIFF, TariffSchedule, format_clock
from pcm_hems.errors import ConfigurationError
from pcm_hems.optimizer.mdp import ComfortPenalty
from pcm_hems.surrogate.training import TrainingConfig
from pcm_hems.thermal.building import (
    REFERENCE_GEOMETRY,
    REFERENCE_LAYERS,
    BuildingGeometry,
    FenestrationElement,
    MaterialLayer,
    compute_envelope_params,
)
from pcm_hems.thermal.hvac import HvacSpec
from pcm_hems.thermal.model import BuildingModel
from pcm_hems.thermal.pcm import REFERENCE_PCM_MASS, PcmSpec, check_pcm_mass

ControllerKind = Literal["deadband", "hems"]

SCENARIOS: Dict[str, Tuple[str, bool]] = {
    "DB": ("deadband", False),
    "DB-PCM": ("deadband", True),
    "HEMS": ("hems", False),
    "HEMS-PCM": ("hems", True),
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ============================================================================
# Physical configuration
# ============================================================================

class LayerSettings(_Strict):
    name: str
    thickness: float = Field(..., gt=0)
    conductivity: float = Field(..., gt=0)
    density: float = Field(..., gt=0)
    specific_heat: float = Field(..., gt=0)


class FenestrationSettings(_Strict):
    name: str
    u_value: float = Field(..., gt=0)
    area: float = Field(..., ge=0)


class BuildingSettings(_Strict):
    length: float = Field(REFERENCE_GEOMETRY.length, gt=0)
    width: float = Field(REFERENCE_GEOMETRY.width, gt=0)
    height: float = Field(REFERENCE_GEOMETRY.height, gt=0)
    accessibility: float = Field(0.5, gt=0, lt=1)
    ach: float = Field(0.5, ge=0)
    layers: Optional[List[LayerSettings]] = None
    fenestration: Optional[List[FenestrationSettings]] = None

    def geometry(self) -> BuildingGeometry:
        fen = (REFERENCE_GEOMETRY.fenestration if self.fenestration is None
               else tuple(FenestrationElement(**f.model_dump()) for f in self.fenestration))
        return BuildingGeometry(self.length, self.width, self.height, tuple(fen))

    def material_layers(self) -> list[MaterialLayer]:
        if self.layers is None:
            return list(REFERENCE_LAYERS)
        return [MaterialLayer(**layer.model_dump()) for layer in self.layers]


class PcmSettings(_Strict):
    melting_point: float
    layer_thickness: float = Field(0.03, gt=0)
    conductivity: float = Field(2.8, gt=0)
    density: float = Field(545.0, gt=0)
    mass: float = Field(REFERENCE_PCM_MASS, gt=0)

    def spec(self, label: str) -> PcmSpec:
        return PcmSpec(label, self.melting_point, self.layer_thickness, self.conductivity,
                       self.density, self.mass)


class HvacSettings(_Strict):
    electrical_rating: float = Field(4.0, gt=0)
    cop: float = Field(4.5, gt=1)
    modes: List[Literal["heat", "cool"]] = Field(default_factory=lambda: ["heat", "cool"], min_length=1)
    heat_limit: float = 24.0
    cool_limit: float = 20.0
    limiter_band: float = Field(4.0, gt=0)
    supply_limit: bool = False

    def spec(self) -> HvacSpec:
        return HvacSpec(self.electrical_rating, self.cop, frozenset(self.modes),
                        self.heat_limit, self.cool_limit, self.limiter_band, self.supply_limit)


class DeadbandSettings(_Strict):
    heat_setpoint: float = 21.0
    cool_setpoint: float = 23.0
    width: float = Field(1.0, gt=0)

    def to_config(self) -> DeadbandConfig:
        return DeadbandConfig(self.heat_setpoint, self.cool_setpoint, self.width)


class TariffWindowSettings(_Strict):
    label: str
    start: str
    end: str
    price: float = Field(..., gt=0)


def _default_windows() -> list[TariffWindowSettings]:
    return [TariffWindowSettings(label=w.label, start=format_clock(w.start), end=format_clock(w.end), price=w.price)
            for w in DEFAULT_TARIFF.windows]


class TariffSettings(_Strict):
    windows: List[TariffWindowSettings] = Field(default_factory=_default_windows)
    feed_in: float = Field(DEFAULT_TARIFF.feed_in, gt=0)

    def schedule(self) -> TariffSchedule:
        return TariffSchedule.from_config([w.model_dump() for w in self.windows], self.feed_in)


# ============================================================================
# Solver and surrogate
# ============================================================================

class SolverSettings(_Strict):
    grid_min: float = 15.0
    grid_max: float = 30.0
    resolution: float = Field(0.1, gt=0)
    comfort: Tuple[float, float] = (20.0, 24.0)
    penalty_per_slot: float = Field(10.0, ge=0)
    penalty_per_degree: float = Field(1.0, ge=0)
    sub_horizon: int = Field(config.SLOTS_PER_DAY, ge=1)
    lookahead_days: int = Field(1, ge=0)
    transition: Literal["exact", "surrogate"] = "exact"
    state_mode: Literal["indoor", "envelope"] = "indoor"
    envelope_grid: Tuple[float, float, float] = (10.0, 35.0, 0.5)
    coupling: float = Field(1.0, ge=0)
    tracking_iterations: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if not self.comfort[0] < self.comfort[1]:
            raise ValueError(f"empty comfort band {self.comfort}")
        if self.transition == "surrogate" and self.state_mode != "indoor":
            raise ValueError("the surrogate transition needs state_mode 'indoor'")
        return self

    def penalty(self) -> ComfortPenalty:
        return ComfortPenalty(self.penalty_per_slot, self.penalty_per_degree)


class SurrogateSettings(_Strict):
    hidden: int = Field(16, ge=1)
    samples: int = Field(40000, ge=0)
    heldout: int = Field(5000, ge=1)
    epochs: int = Field(300, ge=1)
    batch_size: int = Field(128, ge=1)
    learning_rate: float = Field(0.02, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    optimizer: Literal["sgd", "adam"] = "sgd"
    validation_fraction: float = Field(0.2, gt=0, lt=1)
    patience: int = Field(30, ge=1)
    gate_mae: Optional[float] = Field(0.05, gt=0)
    drift_gate: Optional[float] = Field(0.5, gt=0)
    directory: str = config.SURROGATE_DIR

    def training_config(self, seed: int) -> TrainingConfig:
        return TrainingConfig(
            hidden=self.hidden, epochs=self.epochs, batch_size=self.batch_size,
            learning_rate=self.learning_rate, momentum=self.momentum, optimizer=self.optimizer,
            validation_fraction=self.validation_fraction, patience=self.patience, seed=seed,
        )


class HorizonSettings(_Strict):
    start: str = "2019-01-01"
    days: int = Field(365, ge=1)


class SiteSettings(_Strict):
    name: str = Field(..., min_length=1)
    city: Optional[str] = None
    weather: str = "weather.csv"
    pv: str = "pv.csv"
    demand: str = "demand.csv"

    def paths(self, data_dir: str | Path) -> dict[str, Path]:
        """Relative paths resolve under <data_dir>/<site>/."""
        base = Path(data_dir) / self.name
        return {k: (Path(v) if Path(v).is_absolute() else base / v)
                for k, v in (("weather", self.weather), ("pv", self.pv), ("demand", self.demand))}

    @property
    def group(self) -> str:
        return self.city or self.name


def _default_pcms() -> dict[str, PcmSettings]:
    return {"MT21": PcmSettings(melting_point=21.0), "MT23": PcmSettings(melting_point=23.0)}


class ProjectConfig(_Strict):
    building: BuildingSettings = Field(default_factory=BuildingSettings)
    pcm: Dict[str, PcmSettings] = Field(default_factory=_default_pcms)
    pcm_label: str = "MT21"
    hvac: HvacSettings = Field(default_factory=HvacSettings)
    deadband: DeadbandSettings = Field(default_factory=DeadbandSettings)
    tariff: TariffSettings = Field(default_factory=TariffSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    surrogate: SurrogateSettings = Field(default_factory=SurrogateSettings)
    horizon: HorizonSettings = Field(default_factory=HorizonSettings)
    scenarios: List[Literal["DB", "DB-PCM", "HEMS", "HEMS-PCM"]] = Field(
        default_factory=lambda: list(SCENARIOS), min_length=1)
    baseline: Literal["DB", "DB-PCM", "HEMS", "HEMS-PCM"] = "HEMS"
    sites: List[SiteSettings] = Field(default_factory=list)
    pv_scalings: List[float] = Field(default_factory=lambda: [1.0], min_length=1)
    initial_t_indoor: float = 21.0
    initial_t_envelope: float = 21.0
    output_dir: str = config.OUTPUT_DIR
    seed: int = config.SEED

    @model_validator(mode="after")
    def _check(self):
        if self.pcm_label not in self.pcm:
            raise ValueError(f"pcm_label '{self.pcm_label}' is not among the PCM variants {sorted(self.pcm)}")
        if any(s <= 0 for s in self.pv_scalings):
            raise ValueError("pv scalings must be > 0")
        names = [s.name for s in self.sites]
        if len(set(names)) != len(names):
            raise ValueError("site names must be unique")
        geometry = self.building.geometry()
        for label, settings in self.pcm.items():
            # raises ConfigurationError, a ValueError, so it surfaces as a ValidationError
            check_pcm_mass(settings.spec(label), geometry)
        return self

    def pcm_spec(self, label: str | None = None) -> PcmSpec:
        label = label or self.pcm_label
        if label not in self.pcm:
            raise ConfigurationError(f"unknown PCM variant '{label}', expected one of {sorted(self.pcm)}")
        return self.pcm[label].spec(label)

    def building_model(self, pcm: PcmSpec | None = None) -> BuildingModel:
        params = compute_envelope_params(self.building.geometry(), self.building.material_layers(),
                                         self.building.accessibility)
        return BuildingModel(params=params, hvac=self.hvac.spec(), pcm=pcm, ach=self.building.ach,
                             slot_seconds=config.SLOT_SECONDS)

    def scenario_configs(self, site: SiteSettings, data_dir: str | Path, output_dir: str | Path,
                         scenarios: list[str] | None = None, pcm_label: str | None = None,
                         pv_scalings: list[float] | None = None) -> list["ScenarioConfig"]:
        out = []
        for scaling in pv_scalings or self.pv_scalings:
            for name in scenarios or self.scenarios:
                kind, with_pcm = SCENARIOS[name]
                out.append(ScenarioConfig(
                    site=site.name, scenario=name, controller=kind, pcm_enabled=with_pcm,
                    pcm_label=(pcm_label or self.pcm_label) if with_pcm else None,
                    pv_scaling=scaling, data=site.paths(data_dir), output_dir=str(output_dir),
                    seed=self.seed,
                ))
        return out


# ============================================================================
# Runs
# ============================================================================

class ScenarioConfig(_Strict):
    site: str
    scenario: str
    controller: ControllerKind
    pcm_enabled: bool
    pcm_label: Optional[str] = None
    pv_scaling: float = Field(1.0, gt=0)
    data: Dict[str, Path]
    output_dir: str
    seed: int

    @model_validator(mode="after")
    def _check(self):
        if self.pcm_enabled and not self.pcm_label:
            raise ValueError("a PCM scenario needs a pcm_label")
        return self

    @property
    def run_label(self) -> str:
        """Directory-safe label, e.g. HEMS-PCM_MT21_pv1."""
        parts = [self.scenario]
        if self.pcm_enabled and self.pcm_label:
            parts.append(self.pcm_label)
        parts.append(f"pv{self.pv_scaling:g}")
        return "_".join(parts)

    def check_files(self) -> None:
        missing = [str(p) for p in self.data.values() if not Path(p).is_file()]
        if missing:
            raise ConfigurationError(f"site '{self.site}': missing data files {missing}")


class SiteRecord(BaseModel):
    status: Literal["pending", "done", "failed"] = "pending"
    worker: Optional[str] = None
    files: Dict[str, str] = Field(default_factory=dict)
    file_hashes: Dict[str, str] = Field(default_factory=dict)
    input_hashes: Dict[str, str] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)
    error: Optional[str] = None


class RunManifest(BaseModel):
    config_hash: str
    code_version: str
    seeds: Dict[str, int]
    workers: int
    sites: Dict[str, SiteRecord] = Field(default_factory=dict)
    surrogate: Dict[str, Any] = Field(default_factory=dict)
    system: Dict[str, Any] = Field(default_factory=dict)
    wall_clock_s: float = 0.0

    @property
    def failed(self) -> list[str]:
        return sorted(s for s, r in self.sites.items() if r.status != "done")

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
        return path


def load_config(path: str | Path | None) -> ProjectConfig:
    if path is None:
        return ProjectConfig()
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config file {path} is not valid JSON: {e}") from e
    try:
        return ProjectConfig.model_validate(doc)
    except ValidationError as e:
        raise ConfigurationError(f"invalid config {path}:\n{e}") from e
