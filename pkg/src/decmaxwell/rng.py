"""Replayable randomness.

A single 64-bit seed is expanded with ``numpy.random.SeedSequence``; named
streams are derived by spawning so that independent consumers (trials,
meshes, checks) never share state.
"""
import zlib

import numpy as np


def generator(seed: int, *stream) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional stream path (ints or str)."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for s in stream:
        key.append(zlib.crc32(s.encode()) if isinstance(s, str) else int(s))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def spawn(seed: int, n: int, *stream) -> list:
    """n independent generators under one stream."""
    return [generator(seed, *stream, i) for i in range(n)]


def complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Standard complex Gaussian: E|z|^2 = 1."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)
