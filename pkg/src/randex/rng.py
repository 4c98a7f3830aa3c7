"""Seeding and stream derivation.

All randomness in the package flows through counter-based Philox generators
keyed by 64-bit seeds. Parallel work (batch items, study replicates) derives
one child seed per item with :func:`derive_seed`, so results depend only on
the master seed and the item index, never on thread count or execution order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    # Finalizer from the splitmix64 generator; bijective on 64-bit ints.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit child seed for item ``index`` of stream ``seed``.

    The derivation rule is hash(seed, index) = splitmix64(splitmix64(seed) + index);
    it is part of the reproducibility contract and must not change.
    """
    return _splitmix64((_splitmix64(seed & _MASK64) + (index & _MASK64)) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
