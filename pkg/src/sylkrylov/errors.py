"""Exception hierarchy shared by all solver modules."""


class SylKrylovError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SylKrylovError, ValueError):
    """Operands have incompatible shapes."""


class Breakdown(SylKrylovError):
    """A pivot inner product or a new Krylov block is numerically zero."""


class RankDeficientStart(Breakdown):
    """The starting block of a Krylov basis does not have full column rank."""


class MaxIter(SylKrylovError):
    """The iteration limit was reached before the stopping rule was met."""


class SingularOperator(SylKrylovError):
    """The Kronecker-sum operator is (numerically) singular."""


class MatrixMarketError(SylKrylovError, ValueError):
    """A Matrix Market file could not be parsed or is not supported."""
