"""Deterministic derivation of named random streams from one root seed.

Every stochastic stage (splits, sampler draws, embedding init, ...) pulls
its generator from :func:`rng_stream` with a distinct key path, so a whole
pipeline run is reproducible from a single integer while stages stay
statistically independent.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_to_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & _MASK64


def rng_stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Return a Generator for the stream named by ``keys`` under ``seed``."""
    entropy = [int(seed) & _MASK64] + [_key_to_int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
