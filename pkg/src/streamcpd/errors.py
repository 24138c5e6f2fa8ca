"""Exception hierarchy shared across the package.

Every error raised by this package derives from :class:`ChangepointError`,
so callers can catch one base type. The subclasses also inherit the
matching builtin (ValueError, OSError, ...) to stay idiomatic.
"""


class ChangepointError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(ChangepointError, ValueError):
    """A value is outside its mathematical domain (non-finite, wrong
    shape, non-positive scale, violated precondition, ...)."""


class NumericError(ChangepointError, ArithmeticError):
    """A runtime computation hit non-finite data it cannot absorb."""


class DataFormatError(ChangepointError, ValueError):
    """A file or record does not match its declared schema. Messages
    carry the offending line or field."""


class DataIOError(ChangepointError, OSError):
    """A filesystem operation failed; the message names the path."""


class FitError(ChangepointError, RuntimeError):
    """A predictor could not be fit (e.g. rank-deficient calibration)."""


class ReplayError(FitError):
    """An external prediction file is missing a required time index."""


class ConfigError(ChangepointError, ValueError):
    """Command-line or config-file settings are invalid or inconsistent."""
