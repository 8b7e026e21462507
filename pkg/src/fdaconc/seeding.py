"""Seed handling shared by every Monte Carlo routine.

A master seed is split into independent streams with
``numpy.random.SeedSequence(master, spawn_key=keys)``.  The keys are small
integer tuples such as ``(stream_id, replication)`` so that any replication
can be regenerated on its own, in any order, on any number of workers.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[None, int, np.random.Generator]

# stream identifiers used as the first spawn key component
STREAM_DATA = 0
STREAM_SIGNS = 1
STREAM_PERM = 2
STREAM_OPERATORS = 3


def make_rng(seed: SeedLike = None, *keys: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("derived streams need an integer master seed")
        return seed
    if seed is not None and int(seed) < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


def derive_seed(seed: int, *keys: int) -> int:
    """Integer child seed for (seed, *keys); stable across runs and platforms."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
