"""GLR detection statistics in elliptical and circular-Gaussian noise.

The normalized matched filter family works off the coherence ratio
|s^H R^-1 x|^2 / (x^H R^-1 x * s^H R^-1 s); the generic GLR form scans
the radial score over the feasible post-subtraction radii; the plain
matched filter is kept as the classical baseline. Threshold calibration
is analytic where the null law is exact and Monte-Carlo elsewhere.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq
from scipy.stats import gamma

from .errors import (
    CollinearSaturation,
    DimensionMismatch,
    InsufficientTrials,
    InvalidGeometry,
    ZeroSample,
)
from .linalg import as_matrix
from .scores import RadialScore

logger = logging.getLogger(__name__)

SATURATION_EPS = 1e-15
CS_SLACK = 1e-12
CALIBRATION_SEED = 20220201


@dataclass(frozen=True)
class SteeringVector:
    """Nonzero signal direction; detector ops accept this or a plain vector."""

    s: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.s).reshape(-1)
        if not np.any(v != 0):
            raise ZeroSample("steering vector is identically zero")
        object.__setattr__(self, "s", v)

    @property
    def dim(self) -> int:
        return self.s.shape[0]


def _steering(s) -> np.ndarray:
    if isinstance(s, SteeringVector):
        return s.s
    s = np.asarray(s).reshape(-1)
    if not np.any(s != 0):
        raise ZeroSample("steering vector is identically zero")
    return s


def _quad_terms(x, s, Sigma):
    # (tau, s_quad, |cross|^2) in the Sigma^{-1} metric, via one Cholesky
    M = as_matrix(Sigma)
    x = np.asarray(x).reshape(-1)
    s = _steering(s)
    if x.shape[0] != M.shape[0] or s.shape[0] != M.shape[0]:
        raise DimensionMismatch(
            f"x ({x.shape[0]}), s ({s.shape[0]}) and Sigma ({M.shape[0]}) disagree"
        )
    if not np.any(x != 0):
        raise ZeroSample("test vector is identically zero")
    L = np.linalg.cholesky(M)
    a = solve_triangular(L, x.astype(np.complex128), lower=True)
    b = solve_triangular(L, s.astype(np.complex128), lower=True)
    tau = float(np.sum((a * a.conj()).real))
    sq = float(np.sum((b * b.conj()).real))
    c2 = float(abs(np.vdot(b, a)) ** 2)
    return tau, sq, c2


def _nmf_core(x, s, R, factor):
    tau, sq, c2 = _quad_terms(x, s, R)
    coh = c2 / (tau * sq)
    if coh > 1.0 - SATURATION_EPS:
        cap = -factor * math.log(SATURATION_EPS)
        raise CollinearSaturation(
            f"coherence ratio {coh:.17g} saturated; statistic capped at {cap:.6g}",
            statistic=cap,
        )
    return -factor * math.log1p(-coh)


def nmf(x, s, R) -> float:
    """Normalized matched filter -(d-1) log(1 - coherence ratio).

    Invariant to rescaling of x and s and to joint congruence of
    (x, s, R); saturation at coherence 1 raises CollinearSaturation
    carrying the capped value.
    """
    d = as_matrix(R).shape[0]
    if d < 2:
        raise DimensionMismatch("nmf needs dimension >= 2")
    return _nmf_core(x, s, R, d - 1.0)


def nmf_phi(x, s, R) -> float:
    """NMF variant without the circularity assumption: factor d - 1/2."""
    d = as_matrix(R).shape[0]
    if d < 2:
        raise DimensionMismatch("nmf_phi needs dimension >= 2")
    return _nmf_core(x, s, R, d - 0.5)


def nmf_multichannel(channels) -> float:
    """Sum of per-channel NMF statistics over (x_k, s_k, R_k) triples."""
    if not channels:
        raise DimensionMismatch("need at least one channel")
    total = 0.0
    for k, (x, s, R) in enumerate(channels):
        try:
            total += nmf(x, s, R)
        except CollinearSaturation as exc:
            raise CollinearSaturation(f"channel {k}: {exc}", statistic=exc.statistic) from None
        except (ZeroSample, DimensionMismatch) as exc:
            raise type(exc)(f"channel {k}: {exc}") from None
    return total


def _split_m_tau(x, s, Sigma):
    tau, sq, c2 = _quad_terms(x, s, Sigma)
    m = c2 / sq
    if m > tau + CS_SLACK:
        raise InvalidGeometry(
            f"signal energy m = {m:.17g} exceeds total energy tau = {tau:.17g}"
        )
    return tau, min(m, tau)


def glr_g(x, s, Sigma, score: RadialScore) -> float:
    """Generic GLR g(tau) - min g over the feasible radii after subtraction.

    The candidate set is the boundary tau - m together with every
    stationary point of g at or above it; the caller supplies the
    stationary points as model knowledge (no internal root finding).
    """
    tau, m = _split_m_tau(x, s, Sigma)
    lo = tau - m
    candidates = [lo] + [p for p in score.stationary_points if p >= lo]
    with np.errstate(divide="ignore"):
        best = min(float(score.g(c)) for c in candidates)
        return float(score.g(tau)) - best


def glr_cg(x, s, Sigma) -> float:
    """Circular-Gaussian GLR in closed piecewise form.

    tau - log(tau)/2 - (1 + log 2)/2 when the residual tau - m sits at
    or below the score's stationary radius 1/2, otherwise
    m + log(1 - m/tau)/2; the branches agree on the boundary.
    """
    tau, m = _split_m_tau(x, s, Sigma)
    if tau - m <= 0.5:
        return tau - 0.5 * math.log(tau) - 0.5 * (1.0 + math.log(2.0))
    return m + 0.5 * math.log1p(-m / tau)


def matched_filter(x, s, Sigma) -> float:
    """Classical coherent statistic |s^H Sigma^-1 x|^2 / (s^H Sigma^-1 s)."""
    tau, sq, c2 = _quad_terms(x, s, Sigma)
    return c2 / sq


def _phi_scales(channel_dims):
    dims = [int(d) for d in channel_dims]
    if any(d < 2 for d in dims):
        raise DimensionMismatch("nmf_phi channels need dimension >= 2")
    return [(d - 0.5) / (d - 1.0) for d in dims]


def _hypoexp_isf(pfa, scales):
    # survival of a sum of independent exponentials with distinct scales
    lam = np.asarray(scales, float)
    w = np.ones_like(lam)
    for k in range(lam.size):
        for j in range(lam.size):
            if j != k:
                w[k] *= lam[k] / (lam[k] - lam[j])

    def surv(t):
        return float(np.sum(w * np.exp(-t / lam))) - pfa

    hi = float(np.max(lam)) * (-math.log(pfa) + 10.0)
    while surv(hi) > 0.0:
        hi *= 2.0
    return brentq(surv, 0.0, hi, xtol=1e-12, rtol=1e-14)


def _glrcg_h0_sample(rng, dims, n):
    # known-matrix Gaussian null: per channel m ~ Exp(1) independent of
    # the residual tau - m ~ Gamma(d-1, 1)
    total = np.zeros(n)
    for d in dims:
        m = rng.standard_exponential(n)
        u = rng.standard_gamma(d - 1.0, n) if d > 1 else np.zeros(n)
        tau = u + m
        low = u <= 0.5
        v = np.empty(n)
        v[low] = tau[low] - 0.5 * np.log(tau[low]) - 0.5 * (1.0 + math.log(2.0))
        v[~low] = m[~low] + 0.5 * np.log1p(-m[~low] / tau[~low])
        total += v
    return total


def required_h0_trials(pfa: float) -> int:
    """Trial count putting the relative error of a pfa estimate under 10%."""
    return int(math.ceil(100.0 * (1.0 - pfa) / pfa))


def empirical_threshold(stats, pfa):
    """Quantile threshold from null-hypothesis statistics.

    Returns (threshold, pfa_achieved, ci_halfwidth); raises
    InsufficientTrials when the sample cannot resolve pfa to 10%
    relative error.
    """
    stats = np.asarray(stats, float)
    n = stats.size
    need = required_h0_trials(pfa)
    if n < need:
        raise InsufficientTrials(
            f"{n} null trials cannot resolve pfa = {pfa:g}; need >= {need}"
        )
    k = max(1, int(round(n * pfa)))
    thr = float(np.partition(stats, n - k)[n - k])
    achieved = k / n
    ci = 1.96 * math.sqrt(achieved * (1.0 - achieved) / n)
    return thr, achieved, ci


def threshold_from_pfa(
    detector: str,
    pfa: float,
    channel_dims,
    seed: int = CALIBRATION_SEED,
    max_trials: int = 10**7,
) -> float:
    """Detection threshold at the requested false-alarm rate, known matrix.

    nmf and mf have exact exponential/gamma null laws; nmf_phi is a sum
    of rescaled exponentials solved by root finding; glr_cg is calibrated
    by Monte-Carlo from its structural null representation (Gaussian
    background). Adaptive (estimated-matrix) detectors must be calibrated
    empirically from H0 runs instead.
    """
    if not 0.0 < pfa < 1.0:
        raise ValueError(f"pfa must be in (0, 1), got {pfa}")
    dims = [int(d) for d in channel_dims]
    if not dims:
        raise DimensionMismatch("need at least one channel dimension")
    K = len(dims)
    name = detector.replace("_", "-").lower()
    if name in ("nmf", "mf"):
        # single channel unit exponential; K channels sum to Gamma(K, 1)
        if K == 1:
            return -math.log(pfa)
        return float(gamma.isf(pfa, K))
    if name == "nmf-phi":
        scales = _phi_scales(dims)
        if K == 1:
            return -scales[0] * math.log(pfa)
        if len(set(scales)) == K:
            return float(_hypoexp_isf(pfa, scales))
        # coincident scales break the partial-fraction weights; sample instead
        n = required_h0_trials(pfa)
        if n > max_trials:
            raise InsufficientTrials(
                f"pfa = {pfa:g} needs {n} trials, budget is {max_trials}"
            )
        rng = np.random.Generator(np.random.Philox(seed))
        stats = np.zeros(n)
        for lam in scales:
            stats += lam * rng.standard_exponential(n)
        thr, achieved, ci = empirical_threshold(stats, pfa)
        logger.info(
            "nmf-phi threshold %.6g from %d trials (seed %d), pfa %.3g +/- %.3g",
            thr, n, seed, achieved, ci,
        )
        return thr
    if name == "glr-cg":
        n = required_h0_trials(pfa)
        if n > max_trials:
            raise InsufficientTrials(
                f"pfa = {pfa:g} needs {n} trials, budget is {max_trials}"
            )
        rng = np.random.Generator(np.random.Philox(seed))
        stats = _glrcg_h0_sample(rng, dims, n)
        thr, achieved, ci = empirical_threshold(stats, pfa)
        logger.info(
            "glr-cg threshold %.6g from %d trials (seed %d), pfa %.3g +/- %.3g",
            thr, n, seed, achieved, ci,
        )
        return thr
    raise ValueError(f"unknown detector {detector!r}")


@dataclass(frozen=True)
class DetectionReport:
    """Outcome of one detection test."""

    statistic: float
    threshold: float
    detected: bool
    saturated: bool = False
    per_channel: tuple = None

    def __post_init__(self):
        if self.detected != bool(self.statistic >= self.threshold):
            raise ValueError("detected must equal statistic >= threshold")

    @classmethod
    def from_statistic(cls, statistic, threshold, saturated=False, per_channel=None):
        return cls(
            statistic=float(statistic),
            threshold=float(threshold),
            detected=bool(statistic >= threshold),
            saturated=bool(saturated),
            per_channel=None if per_channel is None else tuple(float(v) for v in per_channel),
        )
