import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "SEAWAKE_THREADS"


def max_threads() -> int:
    """Thread cap from ``SEAWAKE_THREADS`` (default: CPU count)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            return max(int(raw), 1)
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, threaded when allowed; result order is input order."""
    items = list(items)
    n = min(max_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
