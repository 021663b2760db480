"""Seed derivation.

Every random stream is a PCG64 generator keyed by ``(master_seed, *path)``
through :class:`numpy.random.SeedSequence`'s spawn keys, so the stream used
by trial ``i`` is a pure function of the master seed and ``i`` and does not
depend on how trials are scheduled across workers.
"""
from __future__ import annotations

import numpy as np


def _sequence(seed: int, key: tuple[int, ...]) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_sequence(seed, key)))


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for the child stream ``key`` of ``seed``."""
    return int(_sequence(seed, key).generate_state(1, dtype=np.uint64)[0])
