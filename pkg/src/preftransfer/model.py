"""Core domain types: labeled points, candidate pools, capped-simplex weights."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_LABEL_SCALE = 10.0

SIMPLEX_TOL = 1e-9
BOX_TOL = 1e-12


@dataclass(frozen=True)
class LabeledPoint:
    """An item with a binary label and its label-augmented embedding.

    The embedding is the raw feature vector with ``label_scale * label``
    appended, so that the label participates in distances between points.
    """

    item_id: str
    features: np.ndarray
    label: int
    label_scale: float = DEFAULT_LABEL_SCALE

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1 or feats.size < 1:
            raise ValueError("features must be a non-empty 1-D vector")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "features", feats)

    @property
    def embedding(self) -> np.ndarray:
        return np.concatenate([self.features, [self.label_scale * self.label]])


@dataclass(frozen=True)
class PreferenceSet:
    """The source preference history: an ordered list of labeled points."""

    points: tuple[LabeledPoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("preference set must contain at least one point")
        dims = {p.features.size for p in pts}
        if len(dims) != 1:
            raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def embeddings(self) -> np.ndarray:
        return np.stack([p.embedding for p in self.points])


@dataclass(frozen=True)
class CandidatePool:
    """The doubled candidate set: each target item with both labels.

    Candidate ``2j`` is item ``j`` with label 1 and candidate ``2j + 1`` is the
    same item with label 0.
    """

    items: tuple[tuple[str, np.ndarray], ...]
    candidates: tuple[LabeledPoint, ...]

    def __post_init__(self):
        if len(self.candidates) != 2 * len(self.items):
            raise ValueError("candidate list must contain 2 entries per item")
        for j, (item_id, feats) in enumerate(self.items):
            up, down = self.candidates[2 * j], self.candidates[2 * j + 1]
            if up.item_id != item_id or down.item_id != item_id:
                raise ValueError(f"candidate/item id mismatch at item {j}")
            if (up.label, down.label) != (1, 0):
                raise ValueError(f"candidate labels out of order at item {j}")
            if not np.array_equal(up.features, feats) or not np.array_equal(down.features, feats):
                raise ValueError(f"candidate/item feature mismatch at item {j}")

    @property
    def num_items(self) -> int:
        return len(self.items)

    @property
    def size(self) -> int:
        return len(self.candidates)

    def __len__(self) -> int:
        return len(self.candidates)

    def embeddings(self) -> np.ndarray:
        return np.stack([c.embedding for c in self.candidates])

    def sibling(self, j: int) -> int:
        """Index of the other label of the same item."""
        return j ^ 1


def build_candidate_pool(items, label_scale: float = DEFAULT_LABEL_SCALE) -> CandidatePool:
    """Double the target items into labeled candidates (label 1 before label 0)."""
    items = [(str(item_id), np.asarray(feats, dtype=float)) for item_id, feats in items]
    if not items:
        raise ValueError("items must be nonempty")
    dims = {feats.size for _, feats in items}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
    candidates = []
    for item_id, feats in items:
        candidates.append(LabeledPoint(item_id, feats, 1, label_scale))
        candidates.append(LabeledPoint(item_id, feats, 0, label_scale))
    return CandidatePool(tuple(items), tuple(candidates))


@dataclass(frozen=True)
class CappedWeights:
    """Weights on the capped simplex {w : sum w = 1, 0 <= w_j <= 1/K}."""

    w: np.ndarray
    cap_k: int

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if self.cap_k < 1:
            raise ValueError("cap_k must be a positive integer")
        if abs(w.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        cap = 1.0 / self.cap_k
        if w.min() < -BOX_TOL or w.max() > cap + BOX_TOL:
            raise ValueError(f"weights must lie in [0, 1/{self.cap_k}]")
        w = np.clip(w, 0.0, cap)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return self.w.size


def uniform_capped_weights(pool_size: int, k: int) -> CappedWeights:
    """Uniform 1/(2m) initialization; feasible whenever K <= 2m."""
    if k > pool_size:
        raise ValueError(f"K={k} exceeds pool size {pool_size}")
    return CappedWeights(np.full(pool_size, 1.0 / pool_size), k)


@dataclass(frozen=True)
class Selection:
    """An exactly-K subset of candidate indices with its uniform measure."""

    indices: frozenset[int]
    target_k: int

    def __post_init__(self):
        object.__setattr__(self, "indices", frozenset(int(j) for j in self.indices))
        if any(j < 0 for j in self.indices):
            raise ValueError("negative candidate index")

    @property
    def is_complete(self) -> bool:
        return len(self.indices) == self.target_k

    def sorted_indices(self) -> list[int]:
        return sorted(self.indices)

    def as_weights(self, pool_size: int) -> CappedWeights:
        if len(self.indices) != self.target_k:
            raise ValueError("selection is not complete")
        w = np.zeros(pool_size)
        w[self.sorted_indices()] = 1.0 / self.target_k
        return CappedWeights(w, self.target_k)


@dataclass(frozen=True)
class RunConfig:
    """Hyperparameters of one selection run."""

    k: int
    fw_iters: int = 1000
    rounding_trials: int = 100
    seed: int = 0
    metric: str = "mmd"
    sigma: float = 1.0
    label_scale: float = DEFAULT_LABEL_SCALE
    kernel_bound: float = 1.0
    exclusive_labels: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("K must be >= 1")
        if self.fw_iters < 1:
            raise ValueError("fw_iters must be >= 1")
        if self.rounding_trials < 1:
            raise ValueError("rounding_trials must be >= 1")
        if self.metric not in ("mmd", "w1"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
