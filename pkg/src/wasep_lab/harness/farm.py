"""Replica farm.

Every replica draws from its own stream keyed by ``(seed, replica)``, so the
per-replica results do not depend on how replicas are distributed over
workers.  Results are returned in replica order, which fixes the order of all
subsequent reductions.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np


def _chunks(replicas: int, parts: int) -> list[np.ndarray]:
    parts = max(1, min(parts, replicas))
    return [c for c in np.array_split(np.arange(replicas), parts) if c.size]


def run_replicas(task: Callable[[Any, Sequence[int]], list], payload: Any, replicas: int,
                 workers: int = 1) -> list:
    """Evaluate ``task(payload, indices)`` over all replica indices.

    Parameters
    ----------
    task : callable
        Module-level function returning one result per index.
    payload : picklable
        Shared read-only inputs.
    replicas : int
    workers : int
        ``1`` runs in-process; more uses a process pool.

    Returns
    -------
    list
        One entry per replica, in replica order.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    if workers <= 1:
        return list(task(payload, list(range(replicas))))
    chunks = _chunks(replicas, 4 * workers)
    out: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(task, [payload] * len(chunks), [c.tolist() for c in chunks]):
            out.extend(part)
    return out
