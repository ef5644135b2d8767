"""Deterministic RNG streams.

Every stochastic operation takes an explicit ``numpy.random.Generator``;
nothing touches global state. Streams for independent work units (seasons,
hours, scenario blocks, CV folds) are derived from a base seed plus a key
tuple so they stay reproducible regardless of execution order or threading.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream"]


def _key_word(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"stream key parts must be int or str, got {type(part).__name__}")


def stream(seed: int, *key) -> np.random.Generator:
    """Generator for the (seed, *key) work unit.

    Same (seed, key) always yields the same stream; distinct keys yield
    independent streams (SeedSequence entropy mixing).
    """
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key_word(k) for k in key]
    return np.random.default_rng(np.random.SeedSequence(words))
