"""Exception types raised by the estimation, testing and ingestion layers."""


class MCVError(Exception):
    """Base class for all errors raised by this package."""


class NotAContrast(MCVError):
    """Hypothesis matrix rows do not sum to zero."""


class DimensionMismatch(MCVError):
    """Matrix/vector dimensions are incompatible with the design."""


class BadDesign(MCVError):
    """Factorial layout parameters are invalid (k < 2, bad effect, ...)."""


class SingularCovariance(MCVError):
    """Group covariance matrix is not positive definite."""


class ZeroMean(MCVError):
    """Group mean vector is (numerically) zero; the MCV is undefined."""


class DegenerateVariance(MCVError):
    """Estimated asymptotic variance is zero; the limit law degenerates."""


class SizeMismatch(MCVError):
    """Requested group sizes do not partition the pooled sample."""


class ZeroPooledMean(MCVError):
    """Pooled mean vector is (numerically) zero; permutation test undefined."""


class TooFewValidReplications(MCVError):
    """More than the tolerated share of resampling replications failed."""


class EmptyDistribution(MCVError):
    """Quantile requested from an empty collection of statistics."""


class BadDegrees(MCVError):
    """Chi-square test requested with zero degrees of freedom."""


class DomainError(MCVError):
    """Numeric argument outside the mathematical domain of the function."""


class InvalidPlan(MCVError):
    """Resampling plan violates its own constraints."""


class UnknownPreset(MCVError):
    """Requested simulation preset name does not exist."""


class ConfigError(MCVError):
    """Scenario configuration failed validation."""


class ParseError(MCVError):
    """Input file could not be parsed; message names row and column."""


class NonNumericValue(ParseError):
    """A response cell does not contain a number."""


class EmptyCell(MCVError):
    """A factor-level combination contains no observations."""
