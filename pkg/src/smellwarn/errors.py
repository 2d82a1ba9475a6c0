"""Exception hierarchy.

Errors fall into three families that the CLI maps onto distinct exit codes:
parse errors (bad input documents, unattributable entities), data-sufficiency
errors (not enough observations for a statistic), and configuration errors.
"""

from __future__ import annotations

from typing import Any


class SmellwarnError(Exception):
    """Base class for every error raised by this package."""


# -- parse family ---------------------------------------------------------


class ParseError(SmellwarnError):
    pass


class MalformedReport(ParseError):
    """The input document cannot be read as a report of the expected format."""


class UnknownSeverity(ParseError, ValueError):
    """A native severity value lies outside its tool's domain."""


class UnknownSmellKind(ParseError, ValueError):
    pass


class UnresolvablePackage(ParseError, ValueError):
    """No package can be derived for a file path or class name.

    ``record`` carries the offending warning or smell when raised from
    profile construction.
    """

    def __init__(self, message: str, record: Any = None):
        super().__init__(message)
        self.record = record


# -- data-sufficiency family ---------------------------------------------


class DataError(SmellwarnError):
    pass


class InsufficientData(DataError):
    pass


class GroupTooSmall(InsufficientData):
    pass


class EmptyRanking(InsufficientData):
    pass


class SampleTooSmall(InsufficientData, ValueError):
    pass


class ConstantSample(DataError, ValueError):
    pass


class ConstantInput(DataError, ValueError):
    pass


class TooShort(InsufficientData, ValueError):
    pass


class LengthMismatch(DataError, ValueError):
    pass


class AllZeroDifferences(DataError, ValueError):
    pass


class OutOfRangeP(DataError, ValueError):
    pass


class OutOfRangeAlpha(DataError, ValueError):
    pass


class UnknownCombo(DataError, KeyError):
    pass


# -- configuration family -------------------------------------------------


class ConfigError(SmellwarnError):
    pass


class InvalidSpec(ConfigError, ValueError):
    """A synthetic-corpus plant specification violates its invariants."""


class DegenerateCaseWarning(UserWarning):
    """Emitted when a metric falls back to a conventional value."""


class MissingStage(ConfigError):
    """A pipeline step was run before the step whose outputs it reads."""
