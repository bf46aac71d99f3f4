"""Exception types shared across the package."""


class EscovError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(EscovError):
    """Matrix is not Hermitian positive definite (Cholesky failed)."""


class DimensionMismatch(EscovError):
    """Operands have incompatible shapes."""


class ZeroSample(EscovError):
    """A sample vector (or steering vector) is identically zero."""


class DegenerateSampleSet(EscovError):
    """Sample set cannot support the requested estimate."""


class DegenerateSegment(EscovError):
    """Lattice recursion hit an all-zero residual segment."""


class InvalidScore(EscovError):
    """Radial score fails its consistency checks."""


class InvalidGeometry(EscovError):
    """Detector quadratic forms violate m <= tau beyond tolerance."""


class CollinearSaturation(EscovError):
    """Coherence ratio reached 1 and the statistic would be infinite.

    Carries the capped statistic so a caller can still report a
    saturated detection instead of a non-finite value.
    """

    def __init__(self, message, statistic=None):
        super().__init__(message)
        self.statistic = statistic


class InsufficientTrials(EscovError):
    """Monte-Carlo budget cannot resolve the requested false-alarm rate."""


class FileFormatError(EscovError):
    """Malformed matrix or sample file; message carries path and line."""


class NoConvergence(EscovError):
    """Fixed-point iteration exhausted its iteration budget.

    Carries the last iterate so callers can inspect or persist it.
    """

    def __init__(self, message, residual=None, iterations=None, estimate=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.estimate = estimate
