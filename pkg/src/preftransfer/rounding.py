"""Bernoulli rounding of capped weights and greedy repair to exactly K items."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelMatrices
from .model import CappedWeights, Selection

PROB_TOL = 1e-9


class MmdSelectionMetric:
    """MMD of a uniform selection to the source, with O(2m) greedy-step scoring.

    Keeps the kernel row-sum of the current selection so that scoring every
    candidate insertion or removal is a single vectorized pass instead of a
    fresh quadratic form per candidate.
    """

    def __init__(self, mats: KernelMatrices):
        self.k_tt = mats.k_tt
        self.cross = mats.cross_mean
        self.ss_const = mats.ss_const
        self.diag = np.diag(mats.k_tt)

    @property
    def pool_size(self) -> int:
        return self.k_tt.shape[0]

    def _sums(self, idx: np.ndarray):
        t = self.k_tt[:, idx].sum(axis=1) if idx.size else np.zeros(self.pool_size)
        a = float(t[idx].sum()) if idx.size else 0.0
        b = float(self.cross[idx].sum())
        return t, a, b

    def distance(self, indices) -> float:
        idx = np.asarray(sorted(indices), dtype=int)
        if idx.size == 0:
            return float(np.sqrt(self.ss_const))
        _, a, b = self._sums(idx)
        s = idx.size
        val = a / s**2 - 2.0 * b / s + self.ss_const
        return float(np.sqrt(max(val, 0.0)))

    def insertion_scores(self, indices) -> np.ndarray:
        """Distance after inserting each candidate; selected entries are +inf."""
        idx = np.asarray(sorted(indices), dtype=int)
        t, a, b = self._sums(idx)
        s = idx.size
        new_a = a + 2.0 * t + self.diag
        new_b = b + self.cross
        val = new_a / (s + 1) ** 2 - 2.0 * new_b / (s + 1) + self.ss_const
        scores = np.sqrt(np.maximum(val, 0.0))
        scores[idx] = np.inf
        return scores

    def removal_scores(self, indices) -> np.ndarray:
        """Distance after removing each selected candidate; others are +inf."""
        idx = np.asarray(sorted(indices), dtype=int)
        t, a, b = self._sums(idx)
        s = idx.size
        scores = np.full(self.pool_size, np.inf)
        if s <= 1:
            scores[idx] = np.sqrt(self.ss_const)
            return scores
        new_a = a - 2.0 * t[idx] + self.diag[idx]
        new_b = b - self.cross[idx]
        val = new_a / (s - 1) ** 2 - 2.0 * new_b / (s - 1) + self.ss_const
        scores[idx] = np.sqrt(np.maximum(val, 0.0))
        return scores


class CallableSelectionMetric:
    """Fallback metric wrapping any selection -> distance function (e.g. W1)."""

    def __init__(self, pool_size: int, fn):
        self._pool_size = pool_size
        self.fn = fn

    @property
    def pool_size(self) -> int:
        return self._pool_size

    def distance(self, indices) -> float:
        return float(self.fn(sorted(indices)))

    def insertion_scores(self, indices) -> np.ndarray:
        current = set(indices)
        scores = np.full(self.pool_size, np.inf)
        for j in range(self.pool_size):
            if j not in current:
                scores[j] = self.fn(sorted(current | {j}))
        return scores

    def removal_scores(self, indices) -> np.ndarray:
        current = set(indices)
        scores = np.full(self.pool_size, np.inf)
        for j in current:
            scores[j] = self.fn(sorted(current - {j}))
        return scores


def bernoulli_round(
    w: CappedWeights, seed: int | None = None, rng: np.random.Generator | None = None,
    exclusive: bool = False,
) -> set[int]:
    """Draw each candidate independently with probability K * w_j.

    With ``exclusive`` set, the two labels of one item are drawn jointly so
    at most one of the pair is selected (marginals preserved when the pair
    probabilities sum to at most 1).
    """
    probs = w.cap_k * np.asarray(w.w, dtype=float)
    if probs.max(initial=0.0) > 1.0 + PROB_TOL:
        raise ValueError("infeasible weights: K * w_j exceeds 1")
    probs = np.clip(probs, 0.0, 1.0)
    if rng is None:
        rng = np.random.default_rng(seed)
    if not exclusive:
        draws = rng.random(probs.size) < probs
        return set(np.flatnonzero(draws).tolist())
    selected: set[int] = set()
    u = rng.random(probs.size // 2)
    for item in range(probs.size // 2):
        p_up, p_down = probs[2 * item], probs[2 * item + 1]
        if u[item] < p_up:
            selected.add(2 * item)
        elif u[item] < min(p_up + p_down, 1.0):
            selected.add(2 * item + 1)
    return selected


def greedy_repair(
    selected, k: int, metric, exclusive: bool = False
) -> Selection:
    """Insert or remove candidates one at a time until exactly K are selected.

    Each step takes the single insertion (or removal) that minimizes the
    resulting distance; ties break toward the lowest index.
    """
    pool_size = metric.pool_size
    if k > pool_size:
        raise ValueError(f"K={k} exceeds pool size {pool_size}")
    current = set(int(j) for j in selected)
    while len(current) < k:
        scores = metric.insertion_scores(current)
        if exclusive:
            for j in current:
                scores[j ^ 1] = np.inf
        j = int(np.argmin(scores))
        if not np.isfinite(scores[j]):
            raise ValueError("no legal insertion available")
        current.add(j)
    while len(current) > k:
        scores = metric.removal_scores(current)
        j = int(np.argmin(scores))
        current.remove(j)
    return Selection(frozenset(current), k)


@dataclass(frozen=True)
class RoundingOutcome:
    selection: Selection
    pre_repair_count: int
    distance: float
    trial_seed: int


def round_once(
    w: CappedWeights, metric, seed: int, exclusive: bool = False
) -> RoundingOutcome:
    raw = bernoulli_round(w, seed=seed, exclusive=exclusive)
    selection = greedy_repair(raw, w.cap_k, metric, exclusive=exclusive)
    dist = metric.distance(selection.indices)
    return RoundingOutcome(selection, len(raw), dist, seed)


def round_repeat_best(
    w: CappedWeights, metric, n_trials: int, seed: int, exclusive: bool = False
) -> RoundingOutcome:
    """Best of ``n_trials`` independent roundings; trial t uses seed + 1 + t."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    best: RoundingOutcome | None = None
    for t in range(n_trials):
        outcome = round_once(w, metric, seed + 1 + t, exclusive=exclusive)
        if best is None or outcome.distance < best.distance:
            best = outcome
    return best
