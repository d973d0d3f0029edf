"""Order-preserving map honouring the ``HARNACK_LAB_THREADS`` cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "HARNACK_LAB_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items) -> list:
    """``[fn(x) for x in items]``, spread over at most ``thread_count()`` threads.

    Results keep the input order, so output is identical for any thread count.
    """
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
