"""Seeded parameter initialization: fan-in uniform kernels, orthogonal recurrences."""

from __future__ import annotations

import numpy as np


def fan_in_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """Uniform(-a, a) with a = sqrt(6 / fan_in)."""
    limit = np.sqrt(6.0 / max(fan_in, 1))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(rng: np.random.Generator, size: int) -> np.ndarray:
    """A size x size orthogonal matrix with a sign convention fixed by QR."""
    a = rng.normal(size=(size, size))
    q, r = np.linalg.qr(a)
    # Fix signs so the decomposition (hence the init) is unique.
    return q * np.sign(np.diag(r))
