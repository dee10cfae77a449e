from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def pmap(func, items, threads: int = 1) -> list:
    """Ordered map, optionally over worker processes.

    Results never depend on ``threads``; every task derives its own random
    stream from its index.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(func, items, chunksize=max(1, len(items) // (4 * threads))))
