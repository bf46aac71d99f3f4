"""Burg lattice, Trench inversion, Schur geometry, Burg-Tyler alternation."""

import numpy as np
import pytest

from escov.errors import DimensionMismatch
from escov.linalg import as_matrix
from escov.samples import SampleSet
from escov.toeplitz import (
    SchurModel,
    burg_multisegment,
    burg_tyler,
    schur_distance,
    schur_to_ar,
    toeplitz_covariance,
    trench_inverse,
)


def ar1_samples(d, n, mu1, seed, texture_shape=None):
    # segments drawn from the stationary process with Schur coefficient mu1
    rng = np.random.default_rng(seed)
    R0 = as_matrix(toeplitz_covariance(SchurModel(1.0, np.array([mu1])), dim=d))
    L = np.linalg.cholesky(R0)
    Z = (rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))) / np.sqrt(2)
    cols = L @ Z
    if texture_shape is not None:
        tau = (texture_shape - 1.0) / rng.gamma(texture_shape, 1.0, n)
        cols = cols * np.sqrt(tau)[None, :]
    return SampleSet(cols)


def disk_coefficients(rng, p, radius=0.7):
    # uniformly phased coefficients with moduli strictly inside the disk
    r = rng.uniform(0.05, radius, p)
    return r * np.exp(1j * rng.uniform(0, 2 * np.pi, p))


def max_diagonal_deviation(M):
    d = M.shape[0]
    dev = 0.0
    for k in range(d):
        diag = np.diagonal(M, offset=k)
        dev = max(dev, np.max(np.abs(diag - diag[0])))
    return dev / np.abs(M[0, 0])


# ---------------------------------------------------------------------
# SchurModel
# ---------------------------------------------------------------------

def test_schur_model_validation():
    SchurModel(1.0, np.array([0.3 + 0.1j]))
    with pytest.raises(ValueError):
        SchurModel(0.0, np.array([0.3]))
    with pytest.raises(ValueError):
        SchurModel(1.0, np.array([1.0]))


# ---------------------------------------------------------------------
# multisegment Burg
# ---------------------------------------------------------------------

def test_burg_single_segment_oracle():
    # one segment (1, 0.5): mu = -2(0.5)/(0.25 + 1) = -0.8,
    # sigma2 = mean power (1 + 0.25)/2 times (1 - mu^2)
    model = burg_multisegment(SampleSet(np.array([[1.0 + 0j], [0.5]])))
    assert model.mu[0] == pytest.approx(-0.8, abs=1e-14)
    assert model.sigma2 == pytest.approx(0.625 * (1 - 0.64), rel=1e-12)

    # direct minimization of the stage-1 residual power over mu
    grid = np.linspace(-0.999, 0.999, 400_001)
    res = np.abs(0.5 + grid * 1.0) ** 2 + np.abs(1.0 + grid * 0.5) ** 2
    assert grid[np.argmin(res)] == pytest.approx(-0.8, abs=1e-5)


def test_burg_white_data_small_coefficients():
    rng = np.random.default_rng(0)
    Z = (rng.standard_normal((8, 10_000)) + 1j * rng.standard_normal((8, 10_000))) / np.sqrt(2)
    model = burg_multisegment(SampleSet(Z))
    assert np.max(np.abs(model.mu)) <= 0.1


def test_burg_ar1_recovery():
    X = ar1_samples(16, 100, 0.7, seed=1)
    model = burg_multisegment(X)
    assert abs(model.mu[0] - 0.7) <= 0.05


def test_burg_order_validation():
    X = SampleSet(np.eye(4, dtype=complex) + 0.1)
    assert burg_multisegment(X, order=2).mu.shape == (2,)
    with pytest.raises(DimensionMismatch):
        burg_multisegment(X, order=4)
    with pytest.raises(DimensionMismatch):
        burg_multisegment(X, order=0)


# ---------------------------------------------------------------------
# Trench inversion and Toeplitz reconstruction
# ---------------------------------------------------------------------

def test_trench_white_is_identity():
    model = SchurModel(1.0, np.zeros(3))
    np.testing.assert_allclose(as_matrix(trench_inverse(model)), np.eye(4), atol=1e-12)


def test_trench_yule_walker_oracle():
    # d=2, sigma2=1, mu1=0.5: covariance [[r0, r1], [r1, r0]] with
    # r0 = 1/(1 - mu^2) = 4/3, r1 = -mu r0 = -2/3
    model = SchurModel(1.0, np.array([0.5]))
    C = np.linalg.inv(as_matrix(trench_inverse(model)))
    np.testing.assert_allclose(C, [[4 / 3, -2 / 3], [-2 / 3, 4 / 3]], atol=1e-12)


def test_trench_inverse_inverts_to_toeplitz():
    rng = np.random.default_rng(2)
    model = SchurModel(0.7, disk_coefficients(rng, 5))
    C = np.linalg.inv(as_matrix(trench_inverse(model)))
    assert max_diagonal_deviation(C) <= 1e-9


def test_toeplitz_covariance_matches_trench():
    rng = np.random.default_rng(3)
    model = SchurModel(1.3, disk_coefficients(rng, 4))
    C = as_matrix(toeplitz_covariance(model))
    np.testing.assert_allclose(
        C, np.linalg.inv(as_matrix(trench_inverse(model))), atol=1e-10
    )


def test_toeplitz_covariance_ar1_extension():
    # AR(1): r_k = r0 (-a1)^k beyond the fitted order
    mu1 = 0.3
    model = SchurModel(1.0, np.array([mu1]))
    C = as_matrix(toeplitz_covariance(model, dim=5))
    r0 = 1.0 / (1.0 - mu1**2)
    assert C[0, 0].real == pytest.approx(r0, rel=1e-12)
    for k in range(1, 5):
        assert C[k, 0].real == pytest.approx(r0 * (-mu1) ** k, rel=1e-12)


def test_yule_walker_consistency():
    # covariance from the model satisfies the Yule-Walker system of its
    # own AR coefficients
    rng = np.random.default_rng(4)
    model = SchurModel(0.9, disk_coefficients(rng, 3))
    a = schur_to_ar(model)
    C = as_matrix(toeplitz_covariance(model))
    r = C[:, 0]  # r_0 .. r_p with r_{-k} = conj(r_k)
    p = len(a)
    for m in range(1, p + 1):
        pred = r[m] + sum(a[j - 1] * r[m - j] for j in range(1, p + 1) if m - j >= 0) \
            + sum(a[j - 1] * np.conj(r[j - m]) for j in range(1, p + 1) if m - j < 0)
        assert abs(pred) <= 1e-8
    power = r[0] + sum(a[j - 1] * np.conj(r[j]) for j in range(1, p + 1))
    assert abs(power - model.sigma2) <= 1e-8


# ---------------------------------------------------------------------
# step-up recursion
# ---------------------------------------------------------------------

def test_schur_to_ar_order_one():
    model = SchurModel(1.0, np.array([0.4 + 0.2j]))
    np.testing.assert_allclose(schur_to_ar(model), [0.4 + 0.2j])


def test_schur_to_ar_white():
    model = SchurModel(1.0, np.zeros(2))
    np.testing.assert_allclose(schur_to_ar(model), [0.0, 0.0])


def test_schur_to_ar_roots_inside_disk():
    rng = np.random.default_rng(5)
    a = schur_to_ar(SchurModel(1.0, disk_coefficients(rng, 4, radius=0.9)))
    roots = np.roots(np.concatenate([[1.0], a]))
    assert np.max(np.abs(roots)) < 1.0


# ---------------------------------------------------------------------
# Schur-coefficient geometry
# ---------------------------------------------------------------------

def test_schur_distance_coincident():
    mu = np.array([0.3, -0.2 + 0.1j])
    assert schur_distance(mu, mu) == 0.0


def test_schur_distance_oracle():
    # d=2: single coefficient, weight (2-1): atanh(0.5)^2
    got = schur_distance(np.array([0.0]), np.array([0.5]), dim=2)
    assert got == pytest.approx(np.arctanh(0.5) ** 2, rel=1e-12)
    assert got == pytest.approx(0.3017372402031454, rel=1e-12)


def test_schur_distance_dimension_weights():
    # weights (d - m) for m = 1..p
    mu = np.array([0.0, 0.0])
    nu = np.array([0.5, 0.5])
    want = 2 * np.arctanh(0.5) ** 2 + 1 * np.arctanh(0.5) ** 2
    assert schur_distance(mu, nu, dim=3) == pytest.approx(want, rel=1e-12)


def test_schur_distance_symmetry():
    rng = np.random.default_rng(6)
    for _ in range(10):
        mu = disk_coefficients(rng, 3)
        nu = disk_coefficients(rng, 3)
        a = schur_distance(mu, nu)
        b = schur_distance(nu, mu)
        assert a == pytest.approx(b, rel=1e-12)


def test_schur_distance_length_mismatch():
    with pytest.raises(DimensionMismatch):
        schur_distance(np.array([0.1]), np.array([0.1, 0.2]))


# ---------------------------------------------------------------------
# Burg-Tyler
# ---------------------------------------------------------------------

def test_burg_tyler_white_limit():
    rng = np.random.default_rng(7)
    Z = (rng.standard_normal((8, 1000)) + 1j * rng.standard_normal((8, 1000))) / np.sqrt(2)
    Sinv = as_matrix(burg_tyler(SampleSet(Z)))
    R = np.linalg.inv(Sinv)
    assert np.linalg.norm(R - np.eye(8)) / np.sqrt(8) <= 0.1


def test_burg_tyler_output_is_toeplitz_generated():
    X = ar1_samples(8, 150, 0.6, seed=8, texture_shape=2.1)
    Sinv = as_matrix(burg_tyler(X))
    R = np.linalg.inv(Sinv)
    assert max_diagonal_deviation(R) <= 1e-9


def test_burg_tyler_scale_invariance_bitwise():
    # a power-of-two scale factor cancels exactly in the radius whitening
    X = ar1_samples(8, 100, 0.5, seed=9, texture_shape=2.1)
    _, m1 = burg_tyler(X, return_model=True)
    _, m2 = burg_tyler(SampleSet(2.0 * X.columns), return_model=True)
    assert np.array_equal(m1.mu, m2.mu)


def test_burg_tyler_per_segment_phase_invariance():
    X = ar1_samples(8, 100, 0.5, seed=10, texture_shape=2.1)
    rng = np.random.default_rng(11)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, X.count))
    _, m1 = burg_tyler(X, return_model=True)
    _, m2 = burg_tyler(SampleSet(X.columns * phases[None, :]), return_model=True)
    np.testing.assert_allclose(m2.mu, m1.mu, atol=1e-10)


def test_burg_tyler_heavy_tail_recovery_beats_plain_burg():
    errors_bt, errors_burg = [], []
    for rep in range(30):
        X = ar1_samples(16, 200, 0.7, seed=100 + rep, texture_shape=2.1)
        _, model = burg_tyler(X, return_model=True)
        errors_bt.append(abs(model.mu[0] - 0.7))
        errors_burg.append(abs(burg_multisegment(X).mu[0] - 0.7))
    assert abs(np.median([e for e in errors_bt])) <= 0.1
    assert np.median(errors_bt) < np.median(errors_burg)


def test_burg_tyler_return_info():
    X = ar1_samples(8, 100, 0.4, seed=12)
    Sinv, model, info = burg_tyler(X, return_model=True, return_info=True)
    assert info.converged
    assert info.residual <= 1e-10
    assert model.sigma2 == 1.0  # unit-power shape by construction
    assert as_matrix(Sinv).shape == (8, 8)
