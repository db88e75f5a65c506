"""Exception hierarchy shared by every subpackage."""


class WittenFlowError(Exception):
    """Base class for all errors raised by wittenflow."""


class RejectedInputError(WittenFlowError, ValueError):
    """Input data is malformed (non-finite values, wrong sign, bad normalization)."""


class DimensionError(WittenFlowError, ValueError):
    """Fields live on incompatible grids or have the wrong component count."""


class GeometryError(WittenFlowError):
    """The metric is degenerate or not positive-definite somewhere."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ParameterError(WittenFlowError, ValueError):
    """A numerical parameter is outside the range where a formula is defined."""


class ConditioningError(WittenFlowError):
    """A density is too close to zero for log-derivative formulas to be trusted."""


class StabilityError(WittenFlowError):
    """An explicit time step lost positivity or left the schedule interval."""


class FlowSingularityError(StabilityError):
    """A geometric flow produced a degenerate metric.

    ``last_good`` carries the final state that was still positive-definite.
    """

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good


class ConvergenceError(WittenFlowError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, last_iterate=None, defect=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.defect = defect


class ConfigError(WittenFlowError, ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
