"""Deterministic chunked execution.

Work is split into fixed-size chunks (never dependent on the worker count)
and results are combined in chunk order, so outputs are bit-identical for
any thread count, including 1.  The NLS_TRANSPORT_THREADS environment
variable overrides the default worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "NLS_TRANSPORT_THREADS"


def worker_count() -> int:
    val = os.environ.get(THREADS_ENV)
    if val:
        return max(1, int(val))
    return os.cpu_count() or 1


def chunk_ranges(n: int, chunk: int):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def run_chunked(fn, n: int, chunk: int) -> list:
    """Evaluate fn(lo, hi) over fixed chunks of range(n); results returned
    in chunk order regardless of scheduling."""
    ranges = chunk_ranges(n, chunk)
    workers = worker_count()
    if workers <= 1 or len(ranges) <= 1:
        return [fn(lo, hi) for lo, hi in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, lo, hi) for lo, hi in ranges]
        return [f.result() for f in futures]
