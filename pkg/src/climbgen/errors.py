"""Exception hierarchy shared across the package.

Two broad families matter to the CLI: ``ValidationError`` (bad inputs,
bad files, bad configuration; exit code 2) and ``DataError`` (the inputs
were well formed but the data cannot support the requested operation;
exit code 3).
"""

from __future__ import annotations


class ClimbgenError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(ClimbgenError):
    """Invalid configuration, parameters, or file contents."""


class DataError(ClimbgenError):
    """Well-formed inputs whose content cannot support the operation."""


class DomainError(ValidationError, ValueError):
    """Numeric input outside the modeled domain."""


class ModelValidityError(ValidationError):
    """A physical model produced a value outside its validity envelope."""


class DegenerateConditionError(ValidationError):
    """A flight condition makes the requested inversion singular."""


class ModelFileError(ValidationError):
    """Model file is corrupted, truncated, or has an unknown schema."""


class ScenarioError(ValidationError):
    """A simulation scenario cannot produce feasible flights."""


class FlightRejectedError(DataError):
    """A flight has too little usable data to fit a thrust profile."""


class InfeasibleClimbError(DataError):
    """Climb rate fell to or below the feasibility floor.

    ``altitude_m`` records where the climb first became infeasible.
    """

    def __init__(self, message: str, altitude_m: float):
        super().__init__(message)
        self.altitude_m = altitude_m


class DegenerateModelError(DataError):
    """Fitted weight distribution has a zero-variance coordinate."""


class DegenerateNodeError(DataError):
    """All basis modes vanish at the requested grid node."""
