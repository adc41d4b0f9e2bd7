"""Thread-pool helpers for cell- and member-level parallelism.

The compiled kernels release the GIL, so a thread pool achieves real
parallelism; results are returned in input order, making aggregation
independent of scheduling.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_ENV_VAR = "RIDDLED_SPIN_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit argument, else the RIDDLED_SPIN_THREADS env var, else cpu count."""
    if threads is not None:
        if threads < 1:
            raise ValueError("thread count must be >= 1")
        return threads
    env = os.environ.get(_ENV_VAR)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"{_ENV_VAR} must be an integer, got {env!r}") from exc
        if n < 1:
            raise ValueError(f"{_ENV_VAR} must be >= 1")
        return n
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Apply fn to items, preserving input order."""
    items = list(items)
    n = resolve_threads(threads)
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
