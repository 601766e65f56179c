"""Exception types raised by the library."""


class RenyiError(Exception):
    """Base class for all library errors."""


class ResolutionError(RenyiError, ValueError):
    """A set descriptor cannot be expressed on the space's cells or points."""


class InfiniteTimesZeroError(RenyiError, ArithmeticError):
    """0 * (+inf) was requested on extended masses."""


class NullEventError(RenyiError):
    """Conditioning on an event of zero mass."""


class NonNormalizableError(RenyiError):
    """Conditioning on an event of infinite mass; use disintegration instead."""


class IncomparableError(RenyiError):
    """Two laws share no positive-density region."""


class InvalidBunchError(RenyiError):
    """A bunch is not an increasing chain of finite positive-mass sets."""


class UndefinedPosteriorError(RenyiError):
    """The requested conditional has zero mass everywhere."""


class RecipeUnavailableError(RenyiError):
    """The prior is not sigma-finite, so the prior-times-model recipe is unavailable.

    Specify the joint law directly instead.
    """


class ImproperLawError(RenyiError):
    """A summary (mean, quantile, ...) was requested from an improper law."""


class SpaceTooLargeError(RenyiError):
    """Exhaustive enumeration refused because the space is too large."""
