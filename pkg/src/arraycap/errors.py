"""Exception types shared across the package."""


class ArrayCapError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ArrayCapError, ValueError):
    """An argument violates a documented precondition."""


class GridRangeError(ArrayCapError, ValueError):
    """A query point lies outside the hull of a sampled grid."""


class TableParseError(ArrayCapError, ValueError):
    """A grid-table file is malformed; the message names the offending line."""


class DegenerateCovarianceError(ArrayCapError, ValueError):
    """A constructed noise covariance failed the positive-semidefinite check."""


class SingularCovarianceError(ArrayCapError, ArithmeticError):
    """A noise covariance is rank deficient and cannot be whitened."""


class ConfigError(ArrayCapError, ValueError):
    """A run configuration is invalid; the message names the offending field."""
