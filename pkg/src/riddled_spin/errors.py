"""Exception types shared across the package."""


class RiddledSpinError(Exception):
    """Base class for all package errors."""


class NonFiniteError(RiddledSpinError):
    """An integration step produced a non-finite state component."""


class UnboundedError(RiddledSpinError):
    """A trajectory escaped the bounded region of the twin-well dynamics."""


class StepUnderflowError(RiddledSpinError):
    """The adaptive step size collapsed below h_min (stiff or singular)."""


class DomainError(RiddledSpinError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateSampleError(RiddledSpinError):
    """A statistic was requested over an empty or fully-unresolved sample."""


class InsufficientDataError(RiddledSpinError):
    """Too few usable data points for a fit."""


class ConfigError(RiddledSpinError, ValueError):
    """A run configuration failed validation."""
