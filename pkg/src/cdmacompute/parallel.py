"""Seeded trial fan-out.

Every trial gets its own SeedSequence derived from (root seed, stream, trial
index), so results do not depend on the worker count or scheduling order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

WORKERS_ENV = "CDMACOMPUTE_WORKERS"


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer")
        return n
    if hasattr(os, "sched_getaffinity"):
        return max(1, len(os.sched_getaffinity(0)))
    return os.cpu_count() or 1


def trial_seeds(seed: int, trials: int, stream: int = 0) -> list[np.random.SeedSequence]:
    return [np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, stream, t]) for t in range(trials)]


def run_trials(fn, seeds, workers: int | None = None) -> list:
    """Apply ``fn`` to each seed; results come back in seed order."""
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(seeds) < 2:
        return [fn(s) for s in seeds]
    chunk = max(1, len(seeds) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds, chunksize=chunk))
