"""Exception hierarchy shared by every gdfkit module.

Each class carries a short machine-readable ``code`` and the process
``exit_code`` the command-line front end maps it to.
"""


class GdfKitError(Exception):
    """Base class for all gdfkit errors."""

    code = "internal"
    exit_code = 1


class InvalidInputError(GdfKitError, ValueError):
    """Arguments violate a documented precondition."""

    code = "invalid-input"
    exit_code = 2


class IngestionError(GdfKitError):
    """An input file could not be parsed within the configured budget."""

    code = "ingestion"
    exit_code = 3


class EmptyResultError(GdfKitError):
    """A pipeline stage produced no retainable output."""

    code = "empty-result"
    exit_code = 4


class NumericError(GdfKitError):
    """A numeric step failed (singular solve, non-finite intermediate)."""

    code = "numeric"
    exit_code = 5


class LowDensityError(GdfKitError):
    """A query point sits where the estimate underflows to zero."""

    code = "low-density"
    exit_code = 6


class UnsupportedDimensionError(InvalidInputError):
    """The operation is undefined for the sample's dimension."""

    code = "unsupported-dimension"
    exit_code = 7
