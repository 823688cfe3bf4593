"""Exception types raised by the library."""


class IdeError(Exception):
    """Base class for all library errors."""


class InputError(IdeError, ValueError):
    """An argument violates a documented precondition on its value."""


class NumericalError(IdeError, ArithmeticError):
    """A computation produced non-finite values or hit a singular system."""


class PreconditionError(IdeError):
    """Model parameters do not satisfy the hypotheses an algorithm relies on."""


class ConvergenceError(NumericalError):
    """An iteration stopped before reaching its tolerance.

    The last measured residual is kept in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateExperimentError(NumericalError):
    """A convergence-rate statistic is undefined (vanishing differences)."""
