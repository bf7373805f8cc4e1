# degenwave/errors.py

"""Exception hierarchy shared by every degenwave module.

Two families matter to callers:
- DomainError: the inputs are outside the model's domain (CLI exit code 2)
- NumericalError: a computation failed or could not be certified (CLI exit code 3)
"""
from typing import Any, Optional


class DegenwaveError(Exception):
    """Base class for all degenwave failures"""
    pass


class DomainError(DegenwaveError, ValueError):
    """Raised when a parameter or input lies outside its admissible range"""
    pass


class ComplexRootsError(DomainError):
    """Raised when a requested eigenvalue pair is complex"""
    pass


class DegenerateMapError(DomainError):
    """Raised when the coordinate change back to the physical frame breaks down (m >= 1)"""
    pass


class BelowMinimalSpeedError(DomainError):
    """Raised when no shooting parameter reaches the requested far-field state at this speed"""
    pass


class ConfigError(DomainError):
    """Raised for malformed configuration files or invalid configuration values.

    Attributes:
        field (Optional[str]): Dotted name of the offending field, e.g. ``model.kappa``.
        line (Optional[int]): Line number of a JSON syntax error.
        column (Optional[int]): Column number of a JSON syntax error.
    """

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ):
        self.field = field
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}, column {column})"
        elif field is not None:
            location = f" (field '{field}')"
        super().__init__(f"{message}{location}")


class NumericalError(DegenwaveError):
    """Base class for numerical failures"""
    pass


class IntegrationError(NumericalError):
    """Raised when a time or space integration cannot continue.

    Attributes:
        partial (Any): Whatever was computed before the failure (a Trajectory or a
            list of PDE states).
    """

    def __init__(self, message: str, partial: Any = None):
        self.partial = partial
        super().__init__(message)


class NoBracketError(NumericalError):
    """Raised when bracket expansion for a bisection does not find a sign change"""
    pass


class FrontNotFoundError(NumericalError):
    """Raised when a state has no unique crossing of the tracking level"""
    pass


class SingularSlopeError(NumericalError):
    """Raised when the phase-plane slope P(n) reaches zero inside (0, 1).

    Attributes:
        location (float): The value of n where P vanished.
    """

    def __init__(self, message: str, location: float):
        self.location = location
        super().__init__(message)


class InsufficientDataError(NumericalError):
    """Raised when a fit has too few samples"""
    pass


class OutputError(NumericalError):
    """Raised when result files cannot be written"""
    pass
