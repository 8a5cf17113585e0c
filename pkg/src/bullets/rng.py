"""Reproducible random streams.

Every stream is a counter-based Philox generator keyed by a 64-bit master
seed and a tuple of integers (batch index, worker purpose, ...).  Streams for
different keys are independent, and a key always yields the same numbers, so
batch results do not depend on how batches are distributed over workers.
"""
from __future__ import annotations

import numpy as np
from gmpy2 import mpq

DEFAULT_SEED = 20240611
MASK64 = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def to_rational(x: float) -> mpq:
    """Exact value of a double."""
    return mpq(*float(x).as_integer_ratio())


def rational_uniforms(rng: np.random.Generator, size: int):
    return [to_rational(x) for x in rng.random(size)]
