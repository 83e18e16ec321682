"""Worker-count control with order-preserving maps.

Work is always split into the same items in the same order and results
are reduced by the caller in that order, so the worker count changes
wall time but never the numbers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_THREADS = 1


def set_threads(n):
    global _THREADS
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be positive")
    _THREADS = n


def get_threads():
    return _THREADS


def ordered_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, possibly evaluated concurrently."""
    items = list(items)
    n = threads or _THREADS
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as ex:
        return list(ex.map(fn, items))
