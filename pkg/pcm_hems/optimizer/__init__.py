from pcm_hems.optimizer.grid import EnvelopeGrid, TemperatureGrid, grid_from_settings
from pcm_hems.optimizer.madp import MadpResult, madp_solve, split_horizon
from pcm_hems.optimizer.mdp import (
    ComfortPenalty,
    MdpInstance,
    Policy,
    SlotData,
    SolveReport,
    ValueTable,
    energy_cost,
    grid_exchange,
    stage_cost,
    terminal_values,
    value_iteration,
)
from pcm_hems.optimizer.simulate import PolicyTrajectory, simulate_policy
from pcm_hems.optimizer.transitions import (
    EnvelopeTracker,
    ExactTransition,
    SurrogateTransition,
    deadband_tracker,
)
