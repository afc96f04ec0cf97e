"""
Worker pool helpers for the complex-action lab
Ordered parallel map and counter-based seed derivation
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar, Union

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

SeedLike = Union[int, Sequence[int]]

MAX_SEED = 2**64


def ordered_map(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Apply func to every item, optionally on a thread pool.

    Results always come back in input order, so any reduction done by the
    caller is independent of the worker count.

    Args:
        func: Function applied to each item
        items: Work items
        workers: Number of worker threads (1 runs inline)

    Returns:
        List of results in input order
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug("Dispatching %d work items to %d workers", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def trial_seed(master_seed: int, *counters: int) -> np.random.SeedSequence:
    """
    Derive the seed of one unit of work from the master seed.

    The entropy of the derived SeedSequence is [master_seed, *counters], so
    trial t of a run seeded with s always draws from SeedSequence([s, t]).
    """
    return np.random.SeedSequence([int(master_seed), *(int(c) for c in counters)])


def make_rng(seed: Union[SeedLike, np.random.SeedSequence]) -> np.random.Generator:
    """Build a numpy Generator from an explicit seed (never from ambient entropy)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if isinstance(seed, (int, np.integer)):
        return np.random.default_rng(np.random.SeedSequence(int(seed)))
    return np.random.default_rng(np.random.SeedSequence([int(s) for s in seed]))
