"""Worker-pool helpers honoring the ``INFOOT_THREADS`` cap.

Parallelism is only ever applied across independent tasks and results are
merged in input order, so outputs are identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence


def thread_count() -> int:
    """Worker cap from ``INFOOT_THREADS``, defaulting to the CPU count."""
    raw = os.environ.get("INFOOT_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"INFOOT_THREADS must be an integer, got {raw!r}") from None
        if value < 1:
            raise ValueError(f"INFOOT_THREADS must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Iterable) -> list:
    """Apply ``fn`` to each item, possibly in parallel; order-preserving."""
    seq: Sequence = list(items)
    workers = min(thread_count(), len(seq))
    if workers <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seq))
