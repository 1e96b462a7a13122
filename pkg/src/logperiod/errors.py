"""Exception hierarchy.

The CLI maps these onto exit codes: usage errors exit 1, data errors exit 2
and fit failures exit 3.
"""


class LogPeriodError(Exception):
    """Base class for all package errors."""


class UsageError(LogPeriodError, ValueError):
    """Invalid arguments or parameter combinations."""


class DataError(LogPeriodError, ValueError):
    """Missing, malformed or out-of-domain input data."""


class FitError(LogPeriodError, RuntimeError):
    """A fit could not be carried out."""


class SingularFitError(FitError):
    """The linear normal equations are singular or too ill-conditioned."""
