"""Order-preserving map with optional worker threads.

Work items derive their random streams from (seed, index), never from
execution order, so results are identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import InvalidConfig

THREADS_ENV = "ECC_GOF_THREADS"


def resolve_threads(threads=None) -> int:
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise InvalidConfig(f"{THREADS_ENV}={raw!r} is not an integer") from None
    threads = int(threads)
    if threads < 1:
        raise InvalidConfig("threads must be >= 1")
    return threads


def ordered_map(fn, items, threads=None):
    threads = resolve_threads(threads)
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
