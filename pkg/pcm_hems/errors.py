"""
Exception hierarchy.

Every error raised on purpose by the package derives from PcmHemsError so the
coordinator can tell a failed site from a crashed interpreter.
"""


class PcmHemsError(RuntimeError):
    pass


class ConfigurationError(PcmHemsError, ValueError):
    """Invalid building, PCM, HVAC, tariff, solver or scenario settings."""


class DomainError(PcmHemsError, ValueError):
    """An input outside the mathematical domain of an operation (NaN, inf)."""


class IntegrationError(PcmHemsError):
    def __init__(self, message: str, step_index: int):
        super().__init__(f"{message} (step {step_index})")
        self.step_index = step_index


class LoadError(PcmHemsError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class SelectionError(PcmHemsError):
    """A requested time window is not covered by the available data."""


class TrainingError(PcmHemsError):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


class SurrogateGateError(PcmHemsError):
    """A surrogate model failed the validation gate configured for the solver."""


class UndefinedMetricError(PcmHemsError):
    """A metric is undefined for the given data, e.g. SC with no PV."""
