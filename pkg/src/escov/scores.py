"""Radial score functions for the M-estimation family.

A score packages g and g' from the per-sample log-likelihood written as
l(Sigma | x) = -(c_K / 2) * (log det Sigma + g(x^H Sigma^{-1} x)), so that
maximum likelihood reduces to Sigma = (1/N) sum g'(tau_n) x_n x_n^H.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidScore

_PROBE_GRID = np.array([0.05, 0.2, 0.7, 1.0, 2.5, 8.0, 30.0])
_FD_TOL = 1e-5


@dataclass(frozen=True)
class RadialScore:
    """Score pair (g, g') with declared interior stationary points of g.

    Construction replays g' against a central finite difference of g on a
    fixed probe grid (tolerance 1e-5) and checks each declared stationary
    point actually zeroes g'. nonneg_derivative promises g' >= 0, which
    plain fixed-point iteration needs; scores violating it must go through
    the geodesic update.
    """

    g: callable
    g_prime: callable
    stationary_points: tuple = ()
    c_k: int = 2
    nonneg_derivative: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.c_k not in (1, 2):
            raise InvalidScore("c_k must be 1 (real) or 2 (complex)")
        t = _PROBE_GRID
        h = 1e-6 * np.maximum(t, 1.0)
        fd = (np.asarray(self.g(t + h), dtype=float) - np.asarray(self.g(t - h), dtype=float)) / (2 * h)
        gp = np.asarray(self.g_prime(t), dtype=float)
        err = np.max(np.abs(fd - gp) / np.maximum(1.0, np.abs(gp)))
        if not np.isfinite(err) or err > _FD_TOL:
            raise InvalidScore(f"g_prime disagrees with finite differences of g (max rel err {err:.2e})")
        for s in self.stationary_points:
            if abs(float(self.g_prime(s))) > 1e-9:
                raise InvalidScore(f"declared stationary point {s} has g'({s}) != 0")
        if self.nonneg_derivative and np.any(gp < 0):
            raise InvalidScore("nonneg_derivative declared but g' < 0 on the probe grid")


def gaussian_score(c_k: int = 1) -> RadialScore:
    """g(t) = t: constant unit weights, the sample covariance limit."""
    return RadialScore(
        g=lambda t: np.asarray(t, dtype=float),
        g_prime=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        stationary_points=(),
        c_k=c_k,
        nonneg_derivative=True,
        name="gaussian",
    )


def circular_gaussian_score() -> RadialScore:
    """Phase-symmetrized complex Gaussian: g(t) = t - log(t)/2.

    g' = 1 - 1/(2t) turns negative below t = 1/2, so this score is only
    valid with the geodesic update, not with plain fixed-point iteration.
    """
    return RadialScore(
        g=lambda t: np.asarray(t, dtype=float) - 0.5 * np.log(t),
        g_prime=lambda t: 1.0 - 0.5 / np.asarray(t, dtype=float),
        stationary_points=(0.5,),
        c_k=2,
        nonneg_derivative=False,
        name="circular-gaussian",
    )


def t_score(dim: int, nu: float, c_k: int = 2) -> RadialScore:
    """Student-t flavored robust score with weights g'(t) = 2(d+nu)/(nu+2t)."""
    if nu <= 0:
        raise InvalidScore("nu must be positive")
    a = dim + nu
    return RadialScore(
        g=lambda t: a * np.log(nu + 2.0 * np.asarray(t, dtype=float)),
        g_prime=lambda t: 2.0 * a / (nu + 2.0 * np.asarray(t, dtype=float)),
        stationary_points=(),
        c_k=c_k,
        nonneg_derivative=True,
        name=f"t{nu:g}",
    )


def named_score(name: str, dim: int, c_k: int = 2) -> RadialScore:
    """Resolve a score by name: 'gaussian', 'cg', or 't<nu>' such as 't3'."""
    if name == "gaussian":
        return gaussian_score(c_k=c_k)
    if name == "cg":
        return circular_gaussian_score()
    if name.startswith("t"):
        try:
            nu = float(name[1:])
        except ValueError:
            raise InvalidScore(f"unknown score name {name!r}") from None
        return t_score(dim, nu, c_k=c_k)
    raise InvalidScore(f"unknown score name {name!r}")
