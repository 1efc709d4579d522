"""Seeded substreams and a deterministic block-parallel map.

Every stochastic routine draws from PCG64 generators keyed by
``(seed, stream, index)`` through :class:`numpy.random.SeedSequence`
spawn keys.  Work is cut into blocks whose boundaries never depend on the
number of workers, so the same seed gives bit-identical output whether the
blocks run on one thread or eight.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

# stream tags keep unrelated consumers of one seed apart
GP_PATHS = 1
MLP_NETWORKS = 2
MC_KERNEL = 3
PD_AUDIT = 4
EXPERIMENT = 5

MC_BLOCK = 65536


def substream(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    """Return the PCG64 generator for draw ``index`` of ``stream`` under ``seed``."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


def blocks(n: int, size: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into ``[start, stop)`` pairs of at most ``size``."""
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def parallel_map(fn: Callable[..., T], items: Sequence, workers: int = 1) -> list[T]:
    """Ordered map over ``items``; threads only change scheduling, never results."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
