"""Maximum-likelihood scatter estimation for elliptical sample models.

Covers the distribution-free Tyler fixed point, its wrapper form that
renormalizes an arbitrary base estimator, and the M-estimator family
driven by a radial score (plain fixed point when g' >= 0, geodesic
shooting when the score derivative changes sign).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateSampleSet,
    InvalidScore,
    NoConvergence,
    ZeroSample,
)
from .kernels import backend
from .linalg import HermitianPD, Normalization, as_matrix, hermitianize, normalize
from .samples import Field, SampleSet
from .scores import RadialScore


@dataclass(frozen=True)
class IterationControl:
    """Stopping rule shared by every fixed-point loop.

    eps bounds the dimensionless step residual tr((R_prev^{-1} R - I)^2),
    so the rule is invariant to the overall scale of the iterates.
    """

    eps: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass(frozen=True)
class FitInfo:
    """Diagnostics from a fixed-point run."""

    iterations: int
    residual: float
    converged: bool


def _rows(X: SampleSet) -> np.ndarray:
    # kernels take samples in rows; SampleSet stores them in columns
    return np.ascontiguousarray(X.columns.T.astype(np.complex128))


def _quad_batch(Sigma, cols):
    # x_n^H Sigma^{-1} x_n for every column, via one Cholesky
    L = np.linalg.cholesky(Sigma)
    Y = solve_triangular(L, cols, lower=True)
    return np.sum((Y * Y.conj()).real, axis=0)


def _step_residual(Sigma_prev, Sigma_new):
    d = Sigma_prev.shape[0]
    A = np.linalg.solve(Sigma_prev, Sigma_new) - np.eye(d)
    return float(np.einsum("ij,ji->", A, A).real)


def _wrap(matrix, mode, field):
    M = as_matrix(matrix)
    if field == Field.REAL:
        M = np.ascontiguousarray(M.real)
    return HermitianPD(M, normalization=mode)


def loglik_concentrated(R, X: SampleSet) -> float:
    """Concentrated log-likelihood -c_K (d-1)/(2N) sum log(x_n^H R^{-1} x_n).

    Meaningful as a likelihood only on the unit-determinant slice; the
    value itself is defined for any PD R.
    """
    M = as_matrix(R)
    q = _quad_batch(M, X.columns)
    if np.any(q <= 0.0):
        raise ZeroSample(f"vanishing quadratic form at sample {int(np.argmin(q))}")
    d = X.dim
    return float(-X.c_k * (d - 1) / (2.0 * X.count) * np.sum(np.log(q)))


def empirical_radial(R, X: SampleSet) -> np.ndarray:
    """Support of the ML radial law: radii sqrt(x_n^H R^{-1} x_n), ascending."""
    q = _quad_batch(as_matrix(R), X.columns)
    if np.any(q <= 0.0):
        raise ZeroSample(f"vanishing quadratic form at sample {int(np.argmin(q))}")
    return np.sort(np.sqrt(q))


def scm(X: SampleSet) -> HermitianPD:
    """Sample covariance (1/N) sum x_n x_n^H; requires a spanning sample set."""
    C = X.columns @ X.columns.conj().T / X.count
    C = hermitianize(C)
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise DegenerateSampleSet(
            f"samples do not span the space (d={X.dim}, N={X.count})"
        ) from None
    return _wrap(C, Normalization.NONE, X.field)


def tyler_fixed_point(
    X: SampleSet,
    ctrl: IterationControl = IterationControl(),
    normalization: Normalization = Normalization.UNIT_TRACE_MEAN,
    loading: float = 0.0,
    return_info: bool = False,
):
    """Tyler's distribution-free fixed point R = (d/N) sum x x^H / (x^H R^{-1} x).

    Iterates are renormalized to unit trace mean (the scale is a free
    Lagrange multiplier); the result is renormalized once to the
    requested mode. `loading` blends each iterate with rho*I, a knob for
    ill-conditioned sample sets that sits outside the plain fixed point
    (default off).
    """
    if X.count < X.dim:
        raise DegenerateSampleSet(f"need N >= d, got N={X.count}, d={X.dim}")
    if not 0.0 <= loading < 1.0:
        raise ValueError(f"loading must be in [0, 1), got {loading}")
    R, iters, res, status = backend.tyler_fit(_rows(X), ctrl.eps, ctrl.max_iter, loading)
    if status == 2:
        raise DegenerateSampleSet("fixed-point iterate lost positive definiteness")
    out = as_matrix(normalize(R, normalization))
    if status == 1:
        raise NoConvergence(
            f"tyler_fixed_point: residual {res:.3e} > eps {ctrl.eps:.3e} "
            f"after {iters} iterations",
            residual=res,
            iterations=iters,
            estimate=out,
        )
    fit = _wrap(out, normalization, X.field)
    if return_info:
        return fit, FitInfo(int(iters), float(res), True)
    return fit


def tyler_of(e, X: SampleSet, ctrl: IterationControl = IterationControl(), return_info=False):
    """Renormalized version of an arbitrary base estimator.

    Alternates whitening y_n = x_n / sqrt(x_n^H R^{-1} x_n) with a fit
    R <- normalize(e(Y)) until tr((R_prev^{-1} R - I)^2) <= eps. With
    e = scm this reproduces the Tyler fixed point. Convergence for a
    general e is not guaranteed; divergence is surfaced, never ignored.
    """
    d = X.dim
    R = np.eye(d, dtype=X.columns.dtype)
    res = np.inf
    for it in range(1, ctrl.max_iter + 1):
        q = _quad_batch(R, X.columns)
        if np.any(q <= 0.0):
            raise DegenerateSampleSet("whitening weight vanished")
        Y = X.columns / np.sqrt(q)
        Rn = as_matrix(normalize(e(SampleSet(Y, field=X.field)), Normalization.UNIT_TRACE_MEAN))
        res = _step_residual(R, Rn)
        R = Rn
        if res <= ctrl.eps:
            fit = _wrap(R, Normalization.UNIT_TRACE_MEAN, X.field)
            if return_info:
                return fit, FitInfo(it, res, True)
            return fit
    raise NoConvergence(
        f"tyler_of: residual {res:.3e} > eps {ctrl.eps:.3e} after {ctrl.max_iter} iterations",
        residual=res,
        iterations=ctrl.max_iter,
        estimate=R,
    )


def _require_span(X: SampleSet):
    if X.count < X.dim:
        raise DegenerateSampleSet(f"need N >= d, got N={X.count}, d={X.dim}")


def m_cov(
    score: RadialScore,
    X: SampleSet,
    ctrl: IterationControl = IterationControl(),
    return_info=False,
):
    """M-estimator fixed point Sigma = (1/N) sum g'(x^H Sigma^{-1} x) x x^H.

    Plain iteration from the identity; valid only for scores with
    g' >= 0 (otherwise the weighted sum can leave the PD cone, use
    m_exp_cov).
    """
    if not score.nonneg_derivative:
        raise InvalidScore(
            f"score {score.name!r} has sign-changing g'; use m_exp_cov"
        )
    _require_span(X)
    d, N = X.dim, X.count
    Sigma = np.eye(d, dtype=X.columns.dtype)
    res = np.inf
    for it in range(1, ctrl.max_iter + 1):
        q = _quad_batch(Sigma, X.columns)
        w = score.g_prime(q)
        Sn = hermitianize((X.columns * w) @ X.columns.conj().T / N)
        res = _step_residual(Sigma, Sn)
        Sigma = Sn
        if res <= ctrl.eps:
            fit = _wrap(Sigma, Normalization.NONE, X.field)
            if return_info:
                return fit, FitInfo(it, res, True)
            return fit
    raise NoConvergence(
        f"m_cov: residual {res:.3e} > eps {ctrl.eps:.3e} after {ctrl.max_iter} iterations",
        residual=res,
        iterations=ctrl.max_iter,
        estimate=Sigma,
    )


def m_of(
    score: RadialScore,
    e,
    X: SampleSet,
    ctrl: IterationControl = IterationControl(),
    return_info=False,
):
    """M version of a base estimator: fixed point of Sigma <- e(sqrt(g'(q)) x).

    With e = scm this coincides with m_cov; a structured e (for instance
    the Toeplitz lattice fit) yields the correspondingly constrained
    M-estimator.
    """
    if not score.nonneg_derivative:
        raise InvalidScore(
            f"score {score.name!r} has sign-changing g'; use m_exp_cov"
        )
    _require_span(X)
    d = X.dim
    Sigma = np.eye(d, dtype=X.columns.dtype)
    res = np.inf
    for it in range(1, ctrl.max_iter + 1):
        q = _quad_batch(Sigma, X.columns)
        w = score.g_prime(q)
        Y = X.columns * np.sqrt(w)
        Sn = hermitianize(as_matrix(e(SampleSet(Y, field=X.field))))
        res = _step_residual(Sigma, Sn)
        Sigma = Sn
        if res <= ctrl.eps:
            fit = _wrap(Sigma, Normalization.NONE, X.field)
            if return_info:
                return fit, FitInfo(it, res, True)
            return fit
    raise NoConvergence(
        f"m_of: residual {res:.3e} > eps {ctrl.eps:.3e} after {ctrl.max_iter} iterations",
        residual=res,
        iterations=ctrl.max_iter,
        estimate=Sigma,
    )


def m_exp_cov(
    score: RadialScore,
    X: SampleSet,
    ctrl: IterationControl = IterationControl(),
    step: float = 1.0,
    init=None,
    return_info=False,
):
    """Geodesic-shooting M-estimator for scores whose g' changes sign.

    Updates Sigma <- Sigma^1/2 exp(step (Sigma^-1/2 S Sigma^-1/2 - I)) Sigma^1/2
    with S the g'-weighted outer-product sum; the residual
    tr((exp(W - I) - I)^2) vanishes exactly at the stationary point of
    the elliptical likelihood. step < 1 damps the shooting when the full
    step oscillates.
    """
    _require_span(X)
    d, N = X.dim, X.count
    if init is None:
        Sigma = np.eye(d, dtype=np.complex128)
    else:
        Sigma = as_matrix(init).astype(np.complex128)
    res = np.inf
    for it in range(1, ctrl.max_iter + 1):
        L = np.linalg.cholesky(Sigma)
        Y = solve_triangular(L, X.columns, lower=True)
        q = np.sum((Y * Y.conj()).real, axis=0)
        w = score.g_prime(q)
        S = hermitianize((X.columns * w) @ X.columns.conj().T / N)
        B = solve_triangular(L, S, lower=True)
        W = hermitianize(solve_triangular(L, B.conj().T, lower=True).conj().T)
        W -= np.eye(d)
        we, V = np.linalg.eigh(W)
        ew = np.exp(we)
        res = float(np.sum((ew - 1.0) ** 2))
        Bv = L @ V
        Sigma = hermitianize((Bv * np.exp(step * we)) @ Bv.conj().T)
        if res <= ctrl.eps:
            fit = _wrap(Sigma, Normalization.NONE, X.field)
            if return_info:
                return fit, FitInfo(it, res, True)
            return fit
    raise NoConvergence(
        f"m_exp_cov: residual {res:.3e} > eps {ctrl.eps:.3e} after {ctrl.max_iter} iterations",
        residual=res,
        iterations=ctrl.max_iter,
        estimate=Sigma,
    )


def cg_cov(X: SampleSet, ctrl: IterationControl = IterationControl(), return_info=False):
    """Phase-symmetrized circular-Gaussian scatter via geodesic shooting.

    Uses the score g'(t) = 1 - 1/(2t), sample-covariance initialization
    and the 1/(1 - 1/(2d)) weight normalization. At d = 1 the full-step
    shooting map is only marginally stable (the linearized rate is -1),
    so the scalar case returns the closed-form stationary point, the
    mean sample power.
    """
    if X.field is not Field.COMPLEX:
        raise InvalidScore("cg_cov assumes complex circular samples")
    _require_span(X)
    if X.dim == 1:
        # sigma = (2/N) sum (|x_n|^2 - sigma/2) solves to the mean power
        sigma = float(np.mean(np.abs(X.columns) ** 2))
        fit = _wrap(np.array([[sigma]], dtype=np.complex128), Normalization.NONE, X.field)
        if return_info:
            return fit, FitInfo(0, 0.0, True)
        return fit
    Sigma, iters, res, status = backend.cg_fit(_rows(X), ctrl.eps, ctrl.max_iter)
    if status == 2:
        raise DegenerateSampleSet("geodesic iterate lost positive definiteness")
    if status == 1:
        raise NoConvergence(
            f"cg_cov: residual {res:.3e} > eps {ctrl.eps:.3e} after {iters} iterations",
            residual=res,
            iterations=iters,
            estimate=Sigma,
        )
    fit = _wrap(Sigma, Normalization.NONE, X.field)
    if return_info:
        return fit, FitInfo(int(iters), float(res), True)
    return fit
