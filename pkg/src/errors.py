"""
Exception hierarchy for the multiverse hazard toolkit.

Every domain error carries the process exit code the CLI reports for it.
"""

from typing import List, Optional, Tuple


class HazardError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(HazardError):
    """Invalid configuration, flag value or request."""

    exit_code = 2


class DataIOError(HazardError):
    """A file could not be read or written."""

    exit_code = 3


class CohortError(HazardError):
    """Cohort data violates the observed-data model."""

    exit_code = 4

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CensoredRiskError(HazardError):
    """Actual risk requested on an arm with censoring before the horizon."""

    exit_code = 4


class LatticeInvariantError(HazardError):
    """A potential-outcome lattice breaks the multiverse coupling."""

    exit_code = 4

    def __init__(self, message: str, cells: Optional[List[Tuple[int, int, str]]] = None) -> None:
        super().__init__(message)
        self.cells = cells or []


class VerificationError(HazardError):
    """A verification sweep found a failing check."""

    exit_code = 5
