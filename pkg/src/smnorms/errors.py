"""Exception hierarchy shared by all modules."""


class SmnormsError(Exception):
    """Base class for every error raised deliberately by this package."""


class NormDataError(SmnormsError, ValueError):
    """Input file is malformed, fails schema checks or violates a data invariant."""


class DegenerateInputError(SmnormsError, ValueError):
    """A statistic is undefined for the input (zero variance, too few points...)."""


class RankDeficientError(SmnormsError, ValueError):
    """Design matrix does not have full column rank or is too ill-conditioned."""


class QuadratureError(SmnormsError, ArithmeticError):
    """Numerical integration did not reach the requested accuracy."""
