"""Exception hierarchy shared across the package.

Everything derives from :class:`PovmLabError` so callers (notably the CLI)
can map failures to exit codes without matching on message text.
"""

from __future__ import annotations


class PovmLabError(Exception):
    """Base class for all povmlab errors."""


class ValidationError(PovmLabError, ValueError):
    """Input violates a documented invariant (bad matrix, bad parameter)."""


class DimensionError(ValidationError):
    """Operator dimensions do not match the operation's requirements."""


class PositivityError(ValidationError):
    """A matrix required to be positive semidefinite is not, beyond tolerance."""


class CompletenessError(ValidationError):
    """An effect or probe family does not span / resolve what it must."""


class ConditioningError(PovmLabError):
    """Conditioning on a (numerically) zero-probability outcome."""


class ResolutionError(ValidationError):
    """Pointer grid too coarse or too narrow for the requested accuracy."""

    def __init__(self, message: str, suggested_n_points: int | None = None):
        super().__init__(message)
        self.suggested_n_points = suggested_n_points


class BoundaryUndecidedError(PovmLabError):
    """Bisection cannot bracket a compatibility boundary (solver undecided)."""
