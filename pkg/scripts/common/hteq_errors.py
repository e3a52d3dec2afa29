"""
HTEQ exception hierarchy.

Library modules raise these; only the CLI maps them to exit codes:
  2 = ConfigError
  3 = DataError (and subclasses)
  4 = NumericalError (and subclasses, including failed acceptance checks)
"""

from __future__ import annotations


class HteqError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(HteqError):
    """Invalid configuration values or CLI usage."""

    exit_code = 2


class DataError(HteqError, ValueError):
    """Malformed or inconsistent data."""

    exit_code = 3


class DimensionError(DataError):
    """Grid, length or shape mismatch."""


class SchemaError(DataError):
    """File format violation. Message carries file:line where known."""


class LeakageError(DataError):
    """Held-out data reached a training call."""


class NumericalError(HteqError, ArithmeticError):
    """Numerical failure in a solve or a quotient."""

    exit_code = 4


class SingularityError(NumericalError):
    """Zero (or numerically zero) pivot, bin or system."""


class AcceptanceError(NumericalError):
    """An evaluation run finished but failed its ordering checks."""
