from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, jobs: int = 1) -> list:
    """Order-preserving map; ``jobs > 1`` fans out to worker processes."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))
