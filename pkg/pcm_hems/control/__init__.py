from pcm_hems.control.deadband import (
    ControlTrajectory,
    ControllerState,
    DeadbandConfig,
    deadband_decide,
    simulate_deadband,
)
