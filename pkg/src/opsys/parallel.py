"""Ordered parallel map controlled by the ``THREADS`` environment variable."""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    raw = os.environ.get("THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def pmap(fn, items):
    """``[fn(x) for x in items]``, run on a thread pool; results keep input order.

    With ``THREADS=1`` the map runs inline, so single-threaded runs are
    strictly sequential.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
