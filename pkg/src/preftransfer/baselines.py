"""Reference selectors: uniform random and greedy nearest-to-source."""

from __future__ import annotations

import numpy as np

from .model import CandidatePool, PreferenceSet, Selection


def random_select(
    pool_size: int, k: int, seed: int, exclusive: bool = False
) -> Selection:
    """Uniform without-replacement sample of K candidates."""
    rng = np.random.default_rng(seed)
    if exclusive:
        if k > pool_size // 2:
            raise ValueError(f"K={k} exceeds item count {pool_size // 2}")
        items = rng.choice(pool_size // 2, size=k, replace=False)
        labels = rng.integers(0, 2, size=k)
        indices = 2 * items + labels
    else:
        if k > pool_size:
            raise ValueError(f"K={k} exceeds pool size {pool_size}")
        indices = rng.choice(pool_size, size=k, replace=False)
    return Selection(frozenset(int(j) for j in indices), k)


def greedy_nearest(
    pool: CandidatePool | np.ndarray, source: PreferenceSet | np.ndarray, k: int
) -> Selection:
    """The K candidates closest (Euclidean, on embeddings) to any source point."""
    cand = pool.embeddings() if isinstance(pool, CandidatePool) else np.atleast_2d(pool)
    src = source.embeddings() if isinstance(source, PreferenceSet) else np.atleast_2d(source)
    if k > cand.shape[0]:
        raise ValueError(f"K={k} exceeds pool size {cand.shape[0]}")
    sq = (
        np.sum(cand**2, axis=1)[:, None]
        + np.sum(src**2, axis=1)[None, :]
        - 2.0 * cand @ src.T
    )
    np.maximum(sq, 0.0, out=sq)
    min_dist = np.sqrt(sq).min(axis=1)
    order = np.argsort(min_dist, kind="stable")
    return Selection(frozenset(int(j) for j in order[:k]), k)
