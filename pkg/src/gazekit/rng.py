"""Seeded random streams.

Every randomized operation in gazekit draws from an :class:`Rng`. The bit
generator is numpy's PCG64 (O'Neill's permuted congruential generator,
128-bit state, published multiplier/increment constants), whose output
stream is fixed for a given seed on every platform numpy supports.

Independent sub-streams are derived from the master seed plus a key
(``rng.derive("pair", "s1/u2", "s3/u1")``) so that work split across
threads draws exactly the numbers a serial run would.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
        return int(key) & _MASK64
    digest = hashlib.blake2b(str(key).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class Rng:
    """Deterministic random stream keyed by a 64-bit unsigned seed."""

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        seed = int(seed)
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._spawn_key = tuple(_spawn_key)
        seq = np.random.SeedSequence(entropy=seed, spawn_key=self._spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def derive(self, *keys) -> "Rng":
        """Independent stream for ``keys``; depends only on the seed and keys."""
        return Rng(self.seed, self._spawn_key + tuple(_key_to_int(k) for k in keys))

    # thin pass-throughs used across the package
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def choice(self, a, size=None, replace=True, p=None):
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def permutation(self, x):
        return self.generator.permutation(x)

    def __repr__(self):
        return f"Rng(seed={self.seed}, key={self._spawn_key})"
