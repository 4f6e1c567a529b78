"""Deterministic data-parallel chunk mapping.

Work items are split into contiguous chunks processed by a thread pool and
reassembled in index order, so results are identical for every worker count
(each item's arithmetic is independent of its chunk neighbours).
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["resolve_workers", "chunked_map"]

ENV_WORKERS = "THERMAL_WORKERS"


def resolve_workers(workers=None):
    """Worker count: explicit argument, else THERMAL_WORKERS, else cpu count."""
    if workers is None:
        env = os.environ.get(ENV_WORKERS)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def chunked_map(fn, n_items, workers=None, min_chunk=256):
    """Apply ``fn(start, stop)`` over [0, n_items) in deterministic chunks.

    ``fn`` must return a tuple of arrays indexed along axis 0; the tuples are
    concatenated in order.
    """
    workers = resolve_workers(workers)
    if n_items == 0:
        raise ValueError("empty work set")
    n_chunks = min(workers, max(1, n_items // min_chunk)) if workers > 1 else 1
    bounds = np.linspace(0, n_items, n_chunks + 1).astype(int)
    spans = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(spans) == 1:
        results = [fn(*spans[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda span: fn(*span), spans))
    first = results[0]
    if not isinstance(first, tuple):
        return np.concatenate(results, axis=0)
    return tuple(np.concatenate([r[i] for r in results], axis=0) for i in range(len(first)))
