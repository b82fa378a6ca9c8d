"""Deterministic chunked reductions with optional worker threads.

Work is always split into the same fixed chunks regardless of the thread
count, and partial results are combined with ``math.fsum`` in chunk order, so
results do not depend on how many threads ran them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

_default_threads = 1


def set_default_threads(k: int | None) -> None:
    global _default_threads
    if k is None or k <= 0:
        k = os.cpu_count() or 1
    _default_threads = int(k)


def default_threads() -> int:
    return _default_threads


def chunks(n: int, size: int) -> list[tuple[int, int]]:
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def map_chunks(fn: Callable[[int, int], object], spans: Sequence[tuple[int, int]], threads: int | None = None) -> list:
    threads = threads or _default_threads
    if threads <= 1 or len(spans) <= 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


def fsum_chunks(fn: Callable[[int, int], float], n: int, size: int, threads: int | None = None) -> float:
    return math.fsum(map_chunks(fn, chunks(n, size), threads))


def fsum_arrays(parts: Iterable) -> float:
    return math.fsum(float(x) for part in parts for x in part)
