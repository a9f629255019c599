"""Exception hierarchy for the multistep package."""


class MultistepError(Exception):
    """Base class for all errors raised by this package."""


class InvalidHorizonError(MultistepError):
    """Horizon or window parameters are out of range."""


class InvalidParameterisationError(MultistepError):
    """A strategy parameter does not divide the horizon (or cannot be parsed)."""


class EmptyDatasetError(MultistepError):
    """A series is too short to produce any supervised window."""


class EmptyTrainingSetError(MultistepError):
    """A learner was asked to fit on zero rows."""


class DataError(MultistepError):
    """Input data is malformed (non-finite values, unparsable cells, ...)."""


class ConstantSeriesError(DataError):
    """Standardisation requested on a series with zero variance."""


class ShapeError(MultistepError):
    """An array argument has the wrong dimensionality or length."""


class AliasError(MultistepError):
    """Unknown strategy alias, or alias used with the wrong parameters."""


class CoverageError(MultistepError):
    """A record collection does not cover the grid required by a table."""


class IntegrationError(MultistepError):
    """Numerical integration diverged."""


class ConfigError(MultistepError):
    """A run configuration failed validation."""
