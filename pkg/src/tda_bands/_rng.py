"""Seeded, counter-based random streams.

Every random quantity is drawn from a Philox stream keyed by
``(seed, domain)`` whose counter starts at ``(0, index, 0, 0)``.  Work unit
``index`` therefore gets the same numbers no matter which worker runs it or
in what order.  Standard normals use the inverse-CDF transform of 53-bit
uniforms taken from the raw 64-bit Philox output.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from .exceptions import ValidationError

BOOTSTRAP = 0
SUBSAMPLE = 1
COVERAGE = 2

_MASK64 = (1 << 64) - 1


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or int(seed) != seed or not 0 <= int(seed) <= _MASK64:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def bit_generator(seed: int, index: int, domain: int) -> np.random.Philox:
    key = np.array([check_seed(seed), domain], dtype=np.uint64)
    counter = np.array([0, index & _MASK64, 0, 0], dtype=np.uint64)
    return np.random.Philox(counter=counter, key=key)


def generator(seed: int, index: int, domain: int) -> np.random.Generator:
    return np.random.Generator(bit_generator(seed, index, domain))


def uniforms(seed: int, index: int, size: int, domain: int = BOOTSTRAP) -> np.ndarray:
    """Uniforms on the open interval (0, 1)."""
    raw = bit_generator(seed, index, domain).random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: int, index: int, size: int, domain: int = BOOTSTRAP) -> np.ndarray:
    return ndtri(uniforms(seed, index, size, domain))


def multiplier_matrix(seed: int, n_replicates: int, n: int, start: int = 0) -> np.ndarray:
    """Rows ``start .. start + n_replicates - 1`` of the bootstrap multipliers."""
    return np.vstack([standard_normals(seed, j, n) for j in range(start, start + n_replicates)])
