"""Thread-count resolution and chunked execution over independent array lines.

Work is only ever split along an axis whose slices are computed independently,
so the result is bit-identical for every thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

THREADS_ENV = "N2D3_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Number of worker threads: explicit argument, then ``N2D3_THREADS``, then all cores."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def map_lines(
    func: Callable[[np.ndarray], np.ndarray],
    arr: np.ndarray,
    split_axis: int,
    threads: int | None = None,
) -> np.ndarray:
    """Apply ``func`` to contiguous chunks of ``arr`` along ``split_axis``.

    ``func`` must treat every index along ``split_axis`` independently and
    preserve the array shape.
    """
    n_threads = min(resolve_threads(threads), arr.shape[split_axis])
    if n_threads <= 1:
        return func(arr)
    bounds = np.linspace(0, arr.shape[split_axis], n_threads + 1).astype(int)
    chunks = [
        np.take(arr, np.arange(lo, hi), axis=split_axis)
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        parts = list(pool.map(func, chunks))
    return np.concatenate(parts, axis=split_axis)
