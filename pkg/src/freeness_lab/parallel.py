"""Order-preserving parallel map over replicate jobs."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["map_ordered", "resolve_threads"]


def resolve_threads(threads: int | None = None) -> int:
    """``threads`` if given, else ``$FREENESS_LAB_THREADS``, else 1."""
    if threads is None:
        threads = int(os.environ.get("FREENESS_LAB_THREADS", "1"))
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


def map_ordered(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool.

    numpy/LAPACK release the GIL, so threads give real parallelism for the
    dense kernels.  Results come back in input order regardless of scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
