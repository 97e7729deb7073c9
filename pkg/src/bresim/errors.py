"""Exception hierarchy shared across the simulation toolkit."""


class BresimError(Exception):
    """Base class for all package-specific errors."""


class EmptySample(BresimError):
    """A metric was requested on a sample with no values."""


class InvalidEstimate(BresimError):
    """A sample or metric input contains a NaN or infinite value."""


class DegenerateDistribution(BresimError):
    """A distribution has no usable spread for the requested metric."""


class InsufficientSample(BresimError):
    """Fewer values than the operation's minimum sample size."""


class ZeroTrueParameter(BresimError):
    """Relative bias is undefined when the true parameter is zero."""


class NotPositiveDefinite(BresimError):
    """A covariance matrix required to be positive (semi)definite is not."""


class RowWithoutData(BresimError):
    """A data row has every cell masked and carries no likelihood information."""


class InvalidGroup(BresimError):
    """A group label lies outside the design's group range."""


class NonConverged(BresimError):
    """Parameter extraction was requested from a non-converged fit."""


class InadmissibleForParam(BresimError):
    """The requested derived parameter is undefined for this solution."""


class ConditionDegenerate(BresimError):
    """Too few usable replications to compute metrics for a condition."""


class ConfigError(BresimError):
    """A run configuration is missing, malformed, or out of bounds."""
