"""Seeded, splittable random streams.

Every consumer of randomness takes an explicit ``numpy.random.Generator``.
Child streams are derived by hashing ``(seed, *key)`` through a
``SeedSequence`` into a counter-based Philox generator, so a work item's
stream depends only on its key and never on execution order.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK_64 = (1 << 64) - 1


def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"stream key parts must be non-negative, got {part}")
    return int(part)


def make_stream(seed: int, *key: int | str) -> np.random.Generator:
    """Return the generator for ``seed`` and an optional child key."""
    entropy = [int(seed) & MASK_64, *(_key_word(k) for k in key)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
