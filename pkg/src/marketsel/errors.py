"""Exception hierarchy for the marketsel package.

All package-specific failures derive from :class:`MarketselError`.  The two
validation errors also subclass :class:`ValueError` so that generic callers
treating bad arguments as ``ValueError`` keep working; the two runtime errors
subclass :class:`RuntimeError` for the same reason.  The command-line layer
maps :class:`ConfigurationError`/:class:`InputError` to exit code 2 and
:class:`ConvergenceError`/:class:`AmbiguityError` to exit code 3.
"""

from __future__ import annotations

__all__ = [
    "MarketselError",
    "ConfigurationError",
    "InputError",
    "ConvergenceError",
    "AmbiguityError",
]


class MarketselError(Exception):
    """Base class of all marketsel exceptions."""


class ConfigurationError(MarketselError, ValueError):
    """A parameter or configuration value violates its documented range."""


class InputError(MarketselError, ValueError):
    """Runtime inputs are inconsistent (mismatched grids, non-finite data)."""


class ConvergenceError(MarketselError, RuntimeError):
    """An iterative solver exhausted its budget.

    Attributes carry diagnostic state: ``bracket`` is the final enclosing
    interval of the root solve (in log space) and ``time_index`` the grid
    index being solved when the failure occurred, when known.
    """

    def __init__(self, message: str, *, bracket=None, time_index=None):
        super().__init__(message)
        self.bracket = bracket
        self.time_index = time_index


class AmbiguityError(MarketselError, RuntimeError):
    """Two agents tie for the lowest survival index.

    The model's selection results require a strict minimizer; ``indices``
    names the tied agents.
    """

    def __init__(self, message: str, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)
