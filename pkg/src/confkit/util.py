"""Small shared helpers."""

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(value=None) -> int:
    """Worker count: explicit value, else CONFKIT_THREADS, else all cores."""
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("CONFKIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int = 1) -> list:
    """Order-preserving map; results are identical for any thread count."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
