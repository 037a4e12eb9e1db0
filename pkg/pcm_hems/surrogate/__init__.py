from pcm_hems.surrogate.network import (
    FORMAT_VERSION,
    Normalization,
    SurrogateModel,
    TransitionNet,
    predict,
    report_path,
    surrogate_path,
)
from pcm_hems.surrogate.training import (
    DriftReport,
    TrainingConfig,
    TrainingReport,
    TrainingSample,
    TrainingSet,
    ValidationReport,
    benchmark_transition,
    closed_loop_drift,
    ensure_gate,
    generate_training_data,
    sticky_action_sampler,
    train,
    validate,
)
