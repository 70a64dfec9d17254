"""Seed derivation.

Every randomized ingredient gets its own stream keyed by (seed, tag, ...),
so adding a new ingredient never perturbs the streams of the others.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *tags: object) -> int:
    """Hash ``seed`` and a sequence of tags into a new 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(seed & MASK64).to_bytes(8, "little"))
    for tag in tags:
        h.update(b"\x1f")
        h.update(repr(tag).encode())
    return int.from_bytes(h.digest(), "little")


def rng_for(seed: int, *tags: object) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *tags)))
