"""Exception hierarchy shared by all modules."""


class IdRegretError(Exception):
    """Base class for library errors."""


class GridError(IdRegretError):
    """Grid too narrow, too coarse, or otherwise unusable."""


class BudgetError(IdRegretError):
    """A dense computation would exceed its size budget."""


class QuadratureError(IdRegretError):
    """A quadrature or transform failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class TripletError(IdRegretError):
    """Invalid or misused Levy triplet."""


class ClassificationError(IdRegretError):
    """Operation called on a process of the wrong recurrence class."""


class TailFitError(IdRegretError):
    """Tail regression rejected (poor fit)."""


class ConfigError(IdRegretError):
    """Bad run configuration."""
