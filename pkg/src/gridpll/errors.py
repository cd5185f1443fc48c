"""Exception types shared across the package."""


class GridPllError(Exception):
    """Base class for all package errors."""


class IllDefinedAngleError(GridPllError, ValueError):
    """Raised when an angle is requested from a zero-length vector."""


class IntegrationDivergedError(GridPllError, ArithmeticError):
    """Raised when the integrated state stops being finite.

    Attributes
    ----------
    last_valid_time : float
        Time of the last step whose state was finite.
    """

    def __init__(self, last_valid_time, message=None):
        self.last_valid_time = float(last_valid_time)
        super().__init__(message or f"integration diverged after t={self.last_valid_time:.9g} s")


class InfeasibleError(GridPllError, ValueError):
    """Raised when an analysis has no admissible solution.

    Attributes
    ----------
    constraint : str
        Human readable name of the violated constraint.
    """

    def __init__(self, constraint, message=None):
        self.constraint = constraint
        super().__init__(message or f"infeasible: {constraint}")


class ConfigError(GridPllError, ValueError):
    """Raised for invalid run configurations. ``problems`` lists one diagnostic per line."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DomainError(GridPllError, ValueError):
    """Raised when a function is evaluated outside the set it is defined on."""


class InfeasibleTransferError(InfeasibleError):
    """Raised when a power step exceeds what the power-angle relation can transfer."""
