"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: validation and domain errors exit 2,
I/O failures exit 3, resource-cap refusals exit 4.
"""


class EwscaleError(Exception):
    """Base class for all package errors."""


class ParameterError(EwscaleError, ValueError):
    """A parameter is outside its documented range."""


class DomainError(EwscaleError, ValueError):
    """Evaluation requested past a bifurcation or outside a branch domain."""


class SizingError(EwscaleError, MemoryError):
    """A requested computation would exceed the configured memory cap."""


class StiffnessError(EwscaleError, ValueError):
    """An explicit solver step violates its stability bound.

    Carries ``required_step``, the largest step the solver accepts.
    """

    def __init__(self, message: str, required_step: float):
        super().__init__(message)
        self.required_step = required_step


class QuadratureError(EwscaleError, ArithmeticError):
    """A quadrature failed to converge; carries the achieved error estimate."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(message)
        self.error_estimate = error_estimate


class InsufficientDataError(EwscaleError, ValueError):
    """Too few usable data points for the requested statistical fit."""


class DataError(EwscaleError, ValueError):
    """Input data violates a precondition (e.g. nonpositive variance)."""


class ConfigError(EwscaleError, ValueError):
    """A configuration file is malformed or contains unknown keys."""
