"""Exception types raised by the filtering toolkit."""


class FilterLabError(Exception):
    """Base class for every error raised by filterlab."""


class CholeskyFailure(FilterLabError, ArithmeticError):
    """A covariance matrix failed the positive-definiteness gate."""

    def __init__(self, message="covariance is not positive definite", component=None):
        if component is not None:
            message = f"{message} (component {component})"
        super().__init__(message)
        self.component = component


class DegenerateKDE(FilterLabError, ArithmeticError):
    pass


class InnovationSingular(FilterLabError, ArithmeticError):
    def __init__(self, message="innovation covariance is singular", component=None):
        if component is not None:
            message = f"{message} (component {component})"
        super().__init__(message)
        self.component = component


class CovarianceDefect(CholeskyFailure):
    """Posterior covariance lost positive definiteness after a Joseph update."""


class TotalWeightCollapse(FilterLabError, ArithmeticError):
    """Every component evidence underflowed to zero."""


class InvalidGridSize(FilterLabError, ValueError):
    pass


class MarginalMismatch(FilterLabError, ValueError):
    pass


class ZeroMassTarget(FilterLabError, ValueError):
    pass


class StiffnessFailure(FilterLabError, ArithmeticError):
    """The adaptive integrator step size underflowed."""


class ImpactDetected(FilterLabError, ArithmeticError):
    pass


class StationKeepingFailure(FilterLabError, ArithmeticError):
    pass


class UkfDivergence(FilterLabError, ArithmeticError):
    pass


class ConfigError(FilterLabError, ValueError):
    pass
