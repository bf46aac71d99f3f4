"""Counter-based random streams for reproducible Monte-Carlo runs.

Every (seed, role, channel, grid-point) tuple owns an independent Philox
stream, and trial t consumes a fixed-width slice of it. Philox advances
in 128-bit blocks of four doubles, so per-trial widths are padded to a
multiple of four; a run chunked into any block sizes then reproduces the
unchunked stream bit for bit.
"""

import numpy as np
from scipy.special import gammaincinv, ndtri

PHILOX_DOUBLES_PER_BLOCK = 4
_MASK64 = (1 << 64) - 1

# stream roles; 0 is reserved so plain Philox(seed) never collides
ROLE_TRAIN = 1
ROLE_TRAIN_TEXTURE = 2
ROLE_TEST = 3
ROLE_TEST_TEXTURE = 4
ROLE_TARGET = 5

# grid-point code 0 is the null-hypothesis calibration stream
POINT_H0 = 0


def _key(seed, role, point, channel):
    if not 0 <= channel < (1 << 16):
        raise ValueError(f"channel out of range: {channel}")
    if not 0 <= point < (1 << 32):
        raise ValueError(f"point out of range: {point}")
    lane = (int(role) << 48) | (int(channel) << 32) | int(point)
    return np.array([int(seed) & _MASK64, lane & _MASK64], dtype=np.uint64)


def uniform_block(seed, role, point, channel, start_trial, n_trials, per_trial):
    """Uniforms for trials [start_trial, start_trial + n_trials).

    Returns shape (n_trials, per_trial); the rows are independent of how
    the trial range is chunked across calls.
    """
    width = -(-per_trial // PHILOX_DOUBLES_PER_BLOCK) * PHILOX_DOUBLES_PER_BLOCK
    bg = np.random.Philox(key=_key(seed, role, point, channel))
    bg.advance((start_trial * width) // PHILOX_DOUBLES_PER_BLOCK)
    u = np.random.Generator(bg).random((n_trials, width))
    return u[:, :per_trial]


def std_complex_normal(u):
    """Map uniform pairs (..., 2k) to standard circular normals (..., k).

    Uses the normal quantile so each coordinate consumes exactly one
    uniform; real and imaginary parts each carry variance 1/2.
    """
    z = ndtri(np.clip(u, 1e-300, None))
    return (z[..., 0::2] + 1j * z[..., 1::2]) / np.sqrt(2.0)


def std_real_normal(u):
    """Map uniforms to standard normals, one for one."""
    return ndtri(np.clip(u, 1e-300, None))


def texture_from_uniform(u, kind, shape):
    """Unit-mean texture draws from uniforms via the quantile transform.

    inverse-gamma requires shape > 1 (the mean diverges otherwise);
    gamma requires shape > 0.
    """
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    if kind == "inverse-gamma":
        if not shape > 1.0:
            raise ValueError(f"inverse-gamma texture needs shape > 1, got {shape}")
        # 1/G with G ~ Gamma(shape, 1); upper tail of G is the lower tail of 1/G
        g = gammaincinv(shape, 1.0 - u)
        return (shape - 1.0) / g
    if kind == "gamma":
        if not shape > 0.0:
            raise ValueError(f"gamma texture needs shape > 0, got {shape}")
        return gammaincinv(shape, u) / shape
    raise ValueError(f"unknown texture kind {kind!r}")
