"""Exception hierarchy shared by every eedi-lab module.

Each error carries a human-readable ``reason`` and the process exit status
the CLI reports for it: 1 for configuration/validation problems, 2 for
failures while running an experiment.
"""

from __future__ import annotations

from typing import Final

EXIT_VALIDATION: Final[int] = 1
EXIT_RUNTIME: Final[int] = 2


class EediLabError(Exception):
    """Base class for all eedi-lab errors.

    Attributes:
        reason: Human-readable failure reason.
        exit_status: Exit status the CLI returns for this error.
    """

    exit_status: int = EXIT_RUNTIME

    def __init__(self, reason: str) -> None:
        """Initialize the error.

        Args:
            reason: Human-readable failure reason.
        """
        super().__init__(reason)
        self.reason = reason

    @property
    def kind(self) -> str:
        """Machine-readable error name used in CLI error JSON."""
        return type(self).__name__


# ---- validation family (exit 1) -------------------------------------------


class ConfigValidationError(EediLabError, ValueError):
    """A configuration value violates its invariant.

    Attributes:
        field_path: Dotted path of the offending field, e.g. ``wdm.rolloff``.
        detail: The reason without the field path.
    """

    exit_status = EXIT_VALIDATION

    def __init__(self, field_path: str, reason: str) -> None:
        """Initialize the error.

        Args:
            field_path: Dotted path of the offending field.
            reason: What is wrong with the value.
        """
        super().__init__(f"{field_path}: {reason}")
        self.field_path = field_path
        self.detail = reason


class UnknownKeyError(EediLabError, KeyError):
    """A config file names a section or key that does not exist."""

    exit_status = EXIT_VALIDATION

    def __str__(self) -> str:
        return self.reason


class ConfigParseError(EediLabError, ValueError):
    """A config file or override could not be parsed."""

    exit_status = EXIT_VALIDATION


# ---- runtime family (exit 2) ----------------------------------------------


class InputLengthError(EediLabError, ValueError):
    """A bit string does not have the length the composition encodes."""


class InvalidBlockError(EediLabError, ValueError):
    """An amplitude block does not match its declared composition."""


class OutOfRangeError(EediLabError, ValueError):
    """A block ranks beyond the encodable index range."""


class EmptyInputError(EediLabError, ValueError):
    """An operation received an empty sequence."""


class InsufficientLengthError(EediLabError, ValueError):
    """A sequence is too short for the requested window or forgetting factor."""


class DegenerateInputError(EediLabError, ValueError):
    """A statistic is undefined because the input carries no energy."""


class ConfigurationError(EediLabError, ValueError):
    """Runtime objects are mutually inconsistent (lengths, rates, counts)."""


class NumericOverflowError(EediLabError, ArithmeticError):
    """Propagation produced NaN or Inf samples."""


class UndefinedCorrelationError(EediLabError, ValueError):
    """Pearson correlation is undefined for a constant series."""


class InsufficientDataError(EediLabError, ValueError):
    """Too few experiment records to run an analysis."""
