import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

from src.common.errors import UsageError

THREADS_ENV = "BELLTIME_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    """Generator for one (stream, block) cell of the seed-splitting grid.

    `stream` is the angle-pair (or point-set) index and `block` the sample block,
    so a block's draws never depend on how many workers produced the others.
    """

    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.PCG64(sequence))


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1").strip()
    try:
        workers = int(raw)
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from exc
    if workers < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {workers}")
    return workers


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Map `fn` over `items`, possibly in threads, returning results in input order."""

    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(fn, items))


def merge_moments(
    counts: Iterable[int], means: Iterable[float], m2s: Iterable[float]
) -> tuple[int, float, float]:
    """Chan's pairwise combination of per-block (count, mean, M2), in block order."""

    n_total, mean_total, m2_total = 0, 0.0, 0.0
    for n, mean, m2 in zip(counts, means, m2s):
        if n == 0:
            continue
        if n_total == 0:
            n_total, mean_total, m2_total = n, float(mean), float(m2)
            continue
        combined = n_total + n
        delta = float(mean) - mean_total
        mean_total += delta * n / combined
        m2_total += float(m2) + delta * delta * n_total * n / combined
        n_total = combined
    return n_total, mean_total, m2_total
