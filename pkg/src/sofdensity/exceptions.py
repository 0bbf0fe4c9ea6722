"""Exception and warning types raised by sofdensity."""


class SofError(Exception):
    """Base class for all sofdensity errors."""


class InvalidGraphError(SofError, ValueError):
    """The input graph violates a structural invariant."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class NumericalError(SofError, ArithmeticError):
    """A factorization or solve broke down (zero pivot, non-finite values)."""


class InconsistencyError(NumericalError):
    """A computed quantity left its admissible range beyond rounding noise."""


class OracleCapError(SofError, ValueError):
    """The graph has too many arcs for exhaustive forest enumeration."""


class DegenerateInputError(SofError, ValueError):
    """Input data is degenerate (zero variance, constant vector, ...)."""


class IllConditionedWarning(RuntimeWarning):
    """The condition estimate of ``I + L(W)`` exceeded the configured bound."""
