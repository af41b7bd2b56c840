"""Exception hierarchy shared by the package and mapped to CLI exit codes."""


class PDGeoError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(PDGeoError, ValueError):
    """Input outside the domain of an operation (not SPD, bad direction, ...)."""

    exit_code = 2


class ResourceError(PDGeoError):
    """A configured cap (grid cells, subset count) would be exceeded."""

    exit_code = 3


class NumericalError(PDGeoError, ArithmeticError):
    """Iteration failed to converge or positivity was lost."""

    exit_code = 4


class SolverError(NumericalError):
    """The center solver could not reach feasibility.

    Attributes
    ----------
    best_violation : float
        Smallest maximal constraint violation seen before giving up.
    """

    def __init__(self, message, best_violation):
        super().__init__(message)
        self.best_violation = best_violation
