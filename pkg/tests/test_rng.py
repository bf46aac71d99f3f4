"""Counter-based stream discipline: determinism, chunking, separation."""

import numpy as np
import pytest

from escov.rng import (
    POINT_H0,
    ROLE_TEST,
    ROLE_TRAIN,
    ROLE_TRAIN_TEXTURE,
    std_complex_normal,
    std_real_normal,
    texture_from_uniform,
    uniform_block,
)


def test_uniform_block_repeatable():
    a = uniform_block(7, ROLE_TRAIN, POINT_H0, 0, 0, 50, 9)
    b = uniform_block(7, ROLE_TRAIN, POINT_H0, 0, 0, 50, 9)
    assert a.shape == (50, 9)
    np.testing.assert_array_equal(a, b)
    assert np.all((a > 0) & (a < 1))


def test_uniform_block_chunk_invariance():
    whole = uniform_block(7, ROLE_TRAIN, 3, 1, 0, 100, 13)
    for cuts in [(0, 100), (0, 1, 100), (0, 37, 64, 100), (0, 50, 51, 100)]:
        parts = [
            uniform_block(7, ROLE_TRAIN, 3, 1, lo, hi - lo, 13)
            for lo, hi in zip(cuts[:-1], cuts[1:])
        ]
        np.testing.assert_array_equal(np.vstack(parts), whole)


def test_uniform_block_mid_start():
    whole = uniform_block(11, ROLE_TEST, 0, 0, 0, 40, 6)
    tail = uniform_block(11, ROLE_TEST, 0, 0, 25, 15, 6)
    np.testing.assert_array_equal(tail, whole[25:])


def test_streams_separate_by_key():
    base = uniform_block(7, ROLE_TRAIN, 0, 0, 0, 20, 8)
    for seed, role, point, channel in [
        (8, ROLE_TRAIN, 0, 0),
        (7, ROLE_TRAIN_TEXTURE, 0, 0),
        (7, ROLE_TRAIN, 1, 0),
        (7, ROLE_TRAIN, 0, 1),
    ]:
        other = uniform_block(seed, role, point, channel, 0, 20, 8)
        assert not np.array_equal(other, base)


def test_key_range_validation():
    with pytest.raises(ValueError):
        uniform_block(7, ROLE_TRAIN, 0, 1 << 16, 0, 1, 4)
    with pytest.raises(ValueError):
        uniform_block(7, ROLE_TRAIN, 1 << 32, 0, 0, 1, 4)


def test_std_complex_normal_moments():
    u = uniform_block(3, ROLE_TEST, 0, 0, 0, 20000, 8)
    z = std_complex_normal(u)
    assert z.shape == (20000, 4)
    assert abs(np.mean(z)) < 0.02
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02)
    # circularity: the pseudo-variance E[z^2] vanishes
    assert abs(np.mean(z**2)) < 0.02


def test_std_real_normal_moments():
    u = uniform_block(4, ROLE_TEST, 0, 0, 0, 20000, 4)
    x = std_real_normal(u)
    assert abs(np.mean(x)) < 0.02
    assert np.var(x) == pytest.approx(1.0, abs=0.03)


@pytest.mark.parametrize("kind,shape", [("inverse-gamma", 2.1), ("gamma", 3.0)])
def test_texture_unit_mean(kind, shape):
    u = uniform_block(5, ROLE_TRAIN_TEXTURE, 0, 0, 0, 200000, 1).ravel()
    tau = texture_from_uniform(u, kind, shape)
    assert np.all(tau > 0)
    assert np.mean(tau) == pytest.approx(1.0, abs=0.02)


def test_texture_shape_validation():
    u = np.array([0.5])
    with pytest.raises(ValueError):
        texture_from_uniform(u, "inverse-gamma", 1.0)
    with pytest.raises(ValueError):
        texture_from_uniform(u, "gamma", 0.0)
    with pytest.raises(ValueError):
        texture_from_uniform(u, "weibull", 2.0)


def test_texture_is_quantile_monotone():
    u = np.linspace(0.01, 0.99, 99)
    g = texture_from_uniform(u, "gamma", 2.1)
    assert np.all(np.diff(g) > 0)
    ig = texture_from_uniform(u, "inverse-gamma", 2.1)
    assert np.all(np.diff(ig) > 0)
