"""Toeplitz-constrained estimation via the lattice parameterization.

A stationary model is carried around as (sigma2, mu): residual power and
Schur (reflection) coefficients. The multisegment Burg recursion fits
mu from data, Trench's algorithm turns a model into the inverse of the
Toeplitz covariance it generates, and the Burg-Tyler loop alternates
elliptical radius whitening with the lattice fit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz as _toeplitz

from .errors import (
    DegenerateSegment,
    DimensionMismatch,
    NoConvergence,
)
from .kernels import backend
from .linalg import HermitianPD, Normalization
from .samples import SampleSet

MU_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class SchurModel:
    """Residual power and reflection coefficients of a stationary process."""

    sigma2: float
    mu: np.ndarray = field(default_factory=lambda: np.zeros(0, np.complex128))

    def __post_init__(self):
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.complex128))
        if mu.ndim != 1:
            raise ValueError("mu must be a flat coefficient list")
        if np.any(np.abs(mu) >= 1.0):
            raise ValueError("reflection coefficients must satisfy |mu| < 1")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def order(self) -> int:
        return self.mu.shape[0]


def _segments(X: SampleSet) -> np.ndarray:
    # one segment per sample, segments in rows
    return np.ascontiguousarray(X.columns.T.astype(np.complex128))


def burg_multisegment(X: SampleSet, order: int = None) -> SchurModel:
    """Multisegment Burg lattice fit of the reflection coefficients.

    Each sample is one length-d segment of the process. Stage m picks
    mu_m = -2 sum f b^* / sum(|f|^2 + |b|^2) over all segments, which
    minimizes the pooled forward+backward residual power and keeps
    |mu_m| < 1 structurally. Order defaults to d - 1.
    """
    d = X.dim
    if order is None:
        order = d - 1
    if not 1 <= order <= d - 1:
        raise DimensionMismatch(f"order must be in [1, d-1] = [1, {d - 1}], got {order}")
    mu = np.zeros(order, np.complex128)
    sigma2, status = backend.burg_fit(_segments(X), order, mu)
    if status != 0:
        raise DegenerateSegment("all forward/backward residuals vanished at some stage")
    return SchurModel(sigma2, mu)


def trench_inverse(model: SchurModel) -> HermitianPD:
    """Inverse of the Hermitian Toeplitz covariance generated by the model.

    Assembled from the stacked prediction-error filters of orders
    0..d-1 (step-up recursion), so the inverse of the output is Toeplitz
    by construction.
    """
    Sinv = backend.trench_inv(model.sigma2, model.mu)
    return HermitianPD(Sinv, normalization=Normalization.NONE)


def schur_to_ar(model: SchurModel) -> np.ndarray:
    """AR polynomial coefficients (a_1 .. a_p) via the step-up recursion."""
    p = model.order
    a = np.zeros(p, np.complex128)
    for m in range(1, p + 1):
        mk = model.mu[m - 1]
        prev = a[: m - 1].copy()
        a[: m - 1] = prev + mk * prev[::-1].conj()
        a[m - 1] = mk
    return a


def toeplitz_covariance(model: SchurModel, dim: int = None) -> HermitianPD:
    """Toeplitz covariance generated by the model, extended to `dim`.

    Autocovariances follow the orthogonality recursion
    r_m = -sum_j a_j r_{m-j} with the order-m step-up coefficients;
    beyond the model order the AR(p) extension continues with the final
    coefficient set.
    """
    p = model.order
    if dim is None:
        dim = p + 1
    if dim < p + 1:
        raise DimensionMismatch(f"dim must be >= order+1 = {p + 1}, got {dim}")
    gain = float(np.prod(1.0 - np.abs(model.mu) ** 2)) if p else 1.0
    r = np.zeros(dim, np.complex128)
    r[0] = model.sigma2 / gain
    a = np.zeros(p, np.complex128)
    for m in range(1, dim):
        if m <= p:
            mk = model.mu[m - 1]
            prev = a[: m - 1].copy()
            a[: m - 1] = prev + mk * prev[::-1].conj()
            a[m - 1] = mk
            k = m
        else:
            k = p
        r[m] = -np.dot(a[:k], r[m - k : m][::-1])
    C = _toeplitz(r, r.conj())
    return HermitianPD(C, normalization=Normalization.NONE)


def schur_distance(mu, nu, dim: int = None) -> float:
    """Weighted hyperbolic distance sum_m (d-m) atanh^2 |(nu-mu)/(1-mu^* nu)|.

    The per-coefficient term is the squared Poincare-disk distance; the
    weight (d - m) counts how often lag m appears in a d x d Toeplitz
    matrix. atanh arguments are clamped at 1 - 1e-12.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=np.complex128))
    nu = np.atleast_1d(np.asarray(nu, dtype=np.complex128))
    if mu.shape != nu.shape:
        raise DimensionMismatch(f"coefficient lists differ in length: {mu.shape[0]} vs {nu.shape[0]}")
    if np.any(np.abs(mu) >= 1.0) or np.any(np.abs(nu) >= 1.0):
        raise ValueError("reflection coefficients must satisfy |mu| < 1")
    p = mu.shape[0]
    if dim is None:
        dim = p + 1
    den = np.abs(1.0 - mu.conj() * nu)
    ratio = np.where(den > 0.0, np.abs(nu - mu) / np.where(den > 0.0, den, 1.0), MU_CLAMP)
    ratio = np.minimum(ratio, MU_CLAMP)
    w = dim - np.arange(1, p + 1)
    return float(np.sum(w * np.arctanh(ratio) ** 2))


def burg_tyler(
    X: SampleSet,
    ctrl=None,
    return_model: bool = False,
    return_info: bool = False,
):
    """Burg-Tyler fixed point: the Toeplitz-shaped analogue of Tyler.

    Alternates whitening each segment by its elliptical radius
    sqrt(x^H Sinv x) with a full-order Burg fit, until the Schur
    coefficients stop moving in the hyperbolic metric. Returns the
    inverse covariance Trench(1, mu): only the correlation shape is
    identifiable, the scale having been removed by the whitening.
    """
    from .estimators import FitInfo, IterationControl

    if ctrl is None:
        ctrl = IterationControl()
    if X.dim < 2:
        raise DimensionMismatch("burg_tyler needs segments of length >= 2")
    Sinv, mu, iters, res, status = backend.bt_fit(_segments(X), ctrl.eps, ctrl.max_iter)
    if status == 2:
        raise DegenerateSegment("lattice stage lost all residual power")
    if status == 1:
        raise NoConvergence(
            f"burg_tyler: residual {res:.3e} > eps {ctrl.eps:.3e} after {iters} iterations",
            residual=res,
            iterations=iters,
            estimate=Sinv,
        )
    fit = HermitianPD(Sinv, normalization=Normalization.NONE)
    out = [fit]
    if return_model:
        out.append(SchurModel(1.0, mu))
    if return_info:
        out.append(FitInfo(int(iters), float(res), True))
    return fit if len(out) == 1 else tuple(out)
