"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A model, grid or scenario was configured inconsistently."""


class MeasurementError(ValueError):
    """A quantity could not be read off a sampled curve."""


class EstimationError(ValueError):
    pass


class AnalysisError(ValueError):
    """Coincidence data does not support the requested analysis."""


class FitError(RuntimeError):
    """Least-squares fit failed or the data were degenerate."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
