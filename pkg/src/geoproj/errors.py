"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`GeoProjError`, which is itself a ``ValueError`` so callers that only
care about "bad input" can catch the builtin.
"""


class GeoProjError(ValueError):
    """Base class for all package errors."""


class InvalidDistribution(GeoProjError):
    """Vector is not a probability vector (shape, finiteness, or sum)."""


class ZeroProbability(InvalidDistribution):
    """An entry is below the positivity floor."""


class DimensionMismatch(GeoProjError):
    pass


class InvalidWeights(GeoProjError):
    """Weight vector is not an interior simplex point."""


class OutOfSimplex(GeoProjError):
    """An update would move a weight outside (0, 1)."""


class NumericalUnderflow(GeoProjError):
    pass


class DegeneratePencil(GeoProjError):
    """The antipode is undefined because one weight is (numerically) 1."""


class OutOfRange(GeoProjError):
    pass


class BudgetExceeded(GeoProjError):
    pass


class ZeroColumn(GeoProjError):
    pass


class RankTooLarge(GeoProjError):
    pass
