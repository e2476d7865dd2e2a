"""Order-preserving parallel map capped by FAMDYN_THREADS."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("FAMDYN_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"FAMDYN_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"FAMDYN_THREADS must be a positive integer, got {raw!r}")
    return n


def pmap(fn, items) -> list:
    """``[fn(x) for x in items]``; results come back in input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
