from pcm_hems.thermal.building import (
    BuildingGeometry,
    EnvelopeParams,
    FenestrationElement,
    MaterialLayer,
    REFERENCE_GEOMETRY,
    REFERENCE_LAYERS,
    compute_envelope_params,
    element_resistance,
    infiltration_gain,
)
from pcm_hems.thermal.hvac import (
    ACTIONS,
    Action,
    HvacSpec,
    REFERENCE_HVAC,
    SupplyLimiter,
    hvac_thermal_power,
    slot_supply,
)
from pcm_hems.thermal.model import BuildingModel, SlotOutcome, ThermalState, integrate, step
from pcm_hems.thermal.pcm import (
    PcmSpec,
    derive_pcm_mass,
    pcm_enthalpy_delta,
    pcm_soc,
    pcm_specific_heat,
    reference_pcm,
)


def reference_building(pcm: PcmSpec | None = None, ach: float = 0.5, accessibility: float = 0.5,
                       hvac: HvacSpec = REFERENCE_HVAC) -> BuildingModel:
    """The 8 x 6 x 2.7 m lightweight dwelling with its 4 kW / COP 4.5 heat pump."""
    params = compute_envelope_params(REFERENCE_GEOMETRY, REFERENCE_LAYERS, accessibility)
    return BuildingModel(params=params, hvac=hvac, pcm=pcm, ach=ach)
