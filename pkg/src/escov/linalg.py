"""Hermitian positive definite primitives.

All matrix functions go through the Hermitian eigendecomposition and
re-symmetrize the assembled result with (M + M^H)/2 so rounding noise
cannot accumulate into a skew part.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite

HERMITIAN_RTOL = 1e-12
NORMALIZATION_TOL = 1e-9


class Normalization(enum.Enum):
    NONE = "none"
    UNIT_DET = "det"
    UNIT_TRACE_MEAN = "trace"


def as_matrix(M) -> np.ndarray:
    """Unwrap HermitianPD or pass an ndarray through."""
    if isinstance(M, HermitianPD):
        return M.matrix
    return np.asarray(M)


def hermitianize(M: np.ndarray) -> np.ndarray:
    """Average M with its conjugate transpose."""
    return (M + M.conj().T) / 2


@dataclass(frozen=True)
class HermitianPD:
    """Validated Hermitian positive definite matrix.

    Construction checks hermiticity (1e-12 relative Frobenius), positive
    definiteness (Cholesky succeeds) and the declared normalization
    (det = 1 or trace/dim = 1, to 1e-9).
    """

    matrix: np.ndarray
    normalization: Normalization = Normalization.NONE

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
        skew = np.linalg.norm(M - M.conj().T)
        if skew > HERMITIAN_RTOL * max(np.linalg.norm(M), 1e-300):
            raise NotPositiveDefinite("matrix is not Hermitian within tolerance")
        M = hermitianize(M)
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("matrix is not positive definite") from None
        M = M.copy()
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)
        d = M.shape[0]
        if self.normalization is Normalization.UNIT_DET:
            if abs(np.linalg.det(M).real - 1.0) > NORMALIZATION_TOL:
                raise NotPositiveDefinite("declared unit determinant does not hold")
        elif self.normalization is Normalization.UNIT_TRACE_MEAN:
            if abs(np.trace(M).real / d - 1.0) > NORMALIZATION_TOL:
                raise NotPositiveDefinite("declared unit trace mean does not hold")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def cholesky(M) -> np.ndarray:
    """Lower Cholesky factor L with M = L L^H."""
    A = hermitianize(as_matrix(M))
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed") from None


def quad_form(M, x) -> float:
    """Quadratic form x^H M^{-1} x against a Hermitian PD metric M."""
    A = as_matrix(M)
    x = np.asarray(x)
    if x.shape[-1] != A.shape[0]:
        raise DimensionMismatch(f"vector of length {x.shape[-1]} against {A.shape[0]}x{A.shape[0]} matrix")
    L = cholesky(A)
    y = scipy.linalg.solve_triangular(L, np.atleast_2d(x).T, lower=True)
    q = np.sum(np.abs(y) ** 2, axis=0)
    out = np.maximum(q, 0.0)
    return float(out[0]) if x.ndim == 1 else out


def _eigh_fn(M, fn, check_positive=False):
    A = hermitianize(as_matrix(M))
    w, V = np.linalg.eigh(A)
    if check_positive and w.min() <= 0:
        raise NotPositiveDefinite("matrix function needs strictly positive eigenvalues")
    out = (V * fn(w)) @ V.conj().T
    return hermitianize(out)


def matrix_sqrt(M) -> np.ndarray:
    """Hermitian square root of a PD matrix."""
    return _eigh_fn(M, np.sqrt, check_positive=True)


def matrix_exp(M) -> np.ndarray:
    """Exponential of a Hermitian matrix."""
    return _eigh_fn(M, np.exp)


def matrix_log(M) -> np.ndarray:
    """Logarithm of a Hermitian PD matrix."""
    return _eigh_fn(M, np.log, check_positive=True)


def geodesic_dist2(R1, R2) -> float:
    """Squared affine-invariant distance tr(log^2(R1^{-1} R2))."""
    A = as_matrix(R1)
    B = as_matrix(R2)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    L = cholesky(A)
    W = scipy.linalg.solve_triangular(L, B, lower=True)
    W = scipy.linalg.solve_triangular(L, W.conj().T, lower=True).conj().T
    w = np.linalg.eigvalsh(hermitianize(W))
    if w.min() <= 0:
        raise NotPositiveDefinite("second argument is not positive definite")
    return float(np.sum(np.log(w) ** 2))


def normalize(M, mode: Normalization) -> HermitianPD:
    """Rescale a PD matrix to the requested normalization."""
    A = hermitianize(as_matrix(M))
    d = A.shape[0]
    if mode is Normalization.UNIT_DET:
        sign, logdet = np.linalg.slogdet(A)
        if sign.real <= 0:
            raise NotPositiveDefinite("cannot normalize a non-PD matrix")
        A = A * np.exp(-logdet / d)
    elif mode is Normalization.UNIT_TRACE_MEAN:
        t = np.trace(A).real
        if t <= 0:
            raise NotPositiveDefinite("cannot normalize a non-PD matrix")
        A = A * (d / t)
    return HermitianPD(A, mode)
