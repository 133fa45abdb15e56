"""Small shared helpers: worker pool and output formatting."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "FLUXONIUM_NOISE_THREADS"


def worker_count() -> int:
    """Thread count for sweeps and bootstrap resamples (env override only)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, items):
    """Map preserving input order; threaded when the env var requests workers."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def fmt9(x) -> str:
    """Format a float with 9 significant digits (printed-output convention)."""
    return f"{float(x):.9g}"
