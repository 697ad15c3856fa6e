"""Seed derivation and the pinned standard-normal generator.

Algorithm ``inverse-cdf-v1``:

* a 64-bit seed initializes ``numpy.random.SeedSequence(seed)`` feeding a
  ``PCG64`` bit generator;
* each normal variate consumes one 53-bit integer ``n`` drawn with
  ``Generator.integers(0, 2**53, dtype=uint64)`` and is ``ndtri((n + 0.5) / 2**53)``
  (inverse standard-normal CDF); the half offset keeps the argument in (0, 1);
* matrices are filled in row-major order.

Substreams: ``derive_seed(root, tag, *indices)`` hashes ``tag`` with SHA-256,
uses the first 8 bytes as an integer, and builds
``SeedSequence(root, spawn_key=(tag_int, *indices))``. The derived seed is the
first two 32-bit words of that sequence's state, joined little-endian.
"""
from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

NORMAL_ALGORITHM = "inverse-cdf-v1"
_TWO53 = float(2**53)


def _tag_int(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")


def derive_seed(root: int, tag: str, *indices: int) -> int:
    """Independent 64-bit seed for substream ``(tag, *indices)`` of ``root``."""
    ss = np.random.SeedSequence(int(root), spawn_key=(_tag_int(tag), *map(int, indices)))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


class NormalStream:
    """Standard normals from a 64-bit seed using ``inverse-cdf-v1``."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def normal(self, size) -> np.ndarray:
        n = self._gen.integers(0, 2**53, size=size, dtype=np.uint64)
        return ndtri((n.astype(np.float64) + 0.5) / _TWO53)


def standard_normal(seed: int, size) -> np.ndarray:
    return NormalStream(seed).normal(size)
