"""Order-preserving parallel map and per-index PRNG streams.

``FBLAB_THREADS`` caps the number of worker processes. Results always come
back in input order, so serial and parallel runs produce identical output.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Iterator

import numpy as np


def max_workers() -> int:
    env = os.environ.get("FBLAB_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, min(cap, int(env)))
        except ValueError:
            pass
    return cap


def pmap(fn: Callable, items: Iterable, workers: int | None = None) -> Iterator:
    items = list(items)
    n = min(workers or max_workers(), max_workers(), len(items))
    if n <= 1:
        for it in items:
            yield fn(it)
        return
    with ProcessPoolExecutor(max_workers=n) as pool:
        yield from pool.map(fn, items)


def rng(seed: int, *index: int) -> np.random.Generator:
    """PCG64 stream for ``(seed, index...)``; independent of evaluation order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(index))))
