"""Exception types shared across the package."""


class BreakbootError(Exception):
    """Base class for all library errors."""


class ConfigError(BreakbootError):
    """Invalid configuration, model specification or input file."""


class RankDeficientError(BreakbootError):
    """A regression design is rank deficient or its Gram matrix exceeds
    the condition-number cap."""


class SingularQError(BreakbootError):
    """A regime moment matrix failed positive definiteness."""


class SingularMiddleError(BreakbootError):
    """The middle matrix R V R' of a Wald form could not be inverted."""


class InfeasiblePartitionError(BreakbootError):
    """No admissible partition exists for the requested break count."""


class DegenerateSSRError(BreakbootError):
    """An F statistic was requested with a non-positive residual sum of
    squares in the denominator."""


class EmptyDrawsError(BreakbootError):
    """Bootstrap draws are required but none are available."""


class BootstrapFailureError(BreakbootError):
    """Too many bootstrap replications failed (above the 5% cap)."""
