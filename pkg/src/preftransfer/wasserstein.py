"""Exact 1-Wasserstein distance and the joint weight/coupling linear program.

Both are solved as capacitated min-cost flows on label-augmented embeddings
with Euclidean ground cost. The joint program scales marginals by
F = lcm(K, n) so the optimal weights come out as exact multiples of 1/F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import MinCostFlow, transport_min_cost
from .model import CandidatePool, CappedWeights, PreferenceSet

MAX_SCALE = 2**62


@dataclass(frozen=True)
class CostMatrix:
    """Euclidean distances between candidate and source embeddings."""

    costs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=float)
        if c.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        if c.min() < 0:
            raise ValueError("costs must be nonnegative")
        object.__setattr__(self, "costs", c)

    @property
    def shape(self):
        return self.costs.shape


def euclidean_costs(cand: np.ndarray, src: np.ndarray) -> CostMatrix:
    cand = np.atleast_2d(np.asarray(cand, dtype=float))
    src = np.atleast_2d(np.asarray(src, dtype=float))
    if cand.shape[1] != src.shape[1]:
        raise ValueError("dimension mismatch between candidates and source")
    sq = (
        np.sum(cand**2, axis=1)[:, None]
        + np.sum(src**2, axis=1)[None, :]
        - 2.0 * cand @ src.T
    )
    np.maximum(sq, 0.0, out=sq)
    return CostMatrix(np.sqrt(sq))


def build_costs(pool: CandidatePool, source: PreferenceSet) -> CostMatrix:
    return euclidean_costs(pool.embeddings(), source.embeddings())


def w1_fixed(weights, costs: CostMatrix, demands: np.ndarray | None = None) -> float:
    """Exact W1 between the weighted candidate measure and the source measure.

    ``weights`` may be a CappedWeights, a raw vector over candidates, or an
    index collection (interpreted as a uniform selection).
    """
    n_cand, n_src = costs.shape
    w = _as_weight_vector(weights, n_cand)
    if demands is None:
        demands = np.full(n_src, 1.0 / n_src)
    cost, _ = transport_min_cost(w, demands, costs.costs)
    return float(cost)


def _as_weight_vector(weights, n_cand: int) -> np.ndarray:
    if isinstance(weights, CappedWeights):
        return np.asarray(weights.w, dtype=float)
    arr = np.asarray(list(weights) if not isinstance(weights, np.ndarray) else weights)
    if arr.dtype.kind in "iu" and (arr.size != n_cand or arr.max(initial=0) > 1):
        # index collection -> uniform selection
        w = np.zeros(n_cand)
        w[arr] = 1.0 / arr.size
        return w
    if arr.size != n_cand:
        raise ValueError(f"weight vector length {arr.size} != {n_cand}")
    return arr.astype(float)


def joint_scale(k: int, n: int) -> int:
    """Common multiple of K and n used to make marginals integral."""
    f = math.lcm(k, n)
    if f > MAX_SCALE:
        f = k * n
        if f > MAX_SCALE:
            raise ValueError(f"scaling factor {f} exceeds the 64-bit budget")
    return f


def solve_joint_lp(
    pool_embeddings: np.ndarray, src_embeddings: np.ndarray, k: int
) -> tuple[CappedWeights, float]:
    """Minimize W1 over the capped simplex jointly with the coupling.

    Solved as min-cost flow: a super source feeds each candidate through an
    arc of capacity F/K, each source point demands F/n, F = lcm(K, n). The
    vertex solution gives weights that are exact multiples of 1/F.
    """
    cand = np.atleast_2d(np.asarray(pool_embeddings, dtype=float))
    src = np.atleast_2d(np.asarray(src_embeddings, dtype=float))
    n_cand, n_src = cand.shape[0], src.shape[0]
    if k > n_cand:
        raise ValueError(f"K={k} exceeds pool size {n_cand}")
    costs = euclidean_costs(cand, src).costs
    f = joint_scale(k, n_src)

    # nodes: 0 super source, 1 sink, candidates, sources
    mcf = MinCostFlow(2 + n_cand + n_src)
    cap_arcs = [mcf.add_edge(0, 2 + j, f // k, 0.0) for j in range(n_cand)]
    for j in range(n_src):
        mcf.add_edge(2 + n_cand + j, 1, f // n_src, 0.0)
    for j in range(n_cand):
        for jp in range(n_src):
            mcf.add_edge(2 + j, 2 + n_cand + jp, float(f), costs[j, jp])
    total_cost = mcf.solve(0, 1, float(f))

    flows = np.array([round(mcf.flow_on(a)) for a in cap_arcs], dtype=np.int64)
    w = CappedWeights(flows / f, k)
    return w, float(total_cost / f)


def w1_exact_1d(
    xs: np.ndarray, w_x: np.ndarray, ys: np.ndarray, w_y: np.ndarray
) -> float:
    """Exact W1 between two discrete 1-D measures: the integral of |F_mu - F_nu|."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    w_x = np.asarray(w_x, dtype=float).ravel()
    w_y = np.asarray(w_y, dtype=float).ravel()
    points = np.concatenate([xs, ys])
    deltas = np.concatenate([w_x, -w_y])
    order = np.argsort(points, kind="stable")
    points, deltas = points[order], deltas[order]
    cdf_diff = np.cumsum(deltas)[:-1]
    widths = np.diff(points)
    return float(np.sum(np.abs(cdf_diff) * widths))


def random_lipschitz_functions(dim: int, count: int, rng: np.random.Generator, n_pieces: int = 4):
    """Random max-of-affine functions, 1-Lipschitz by construction."""
    funcs = []
    for _ in range(count):
        dirs = rng.normal(size=(n_pieces, dim))
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = dirs / np.maximum(norms, 1e-12)
        dirs *= rng.uniform(0.2, 1.0, size=(n_pieces, 1))
        offsets = rng.normal(scale=0.5, size=n_pieces)

        def f(x, dirs=dirs, offsets=offsets):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            return np.max(x @ dirs.T + offsets, axis=1)

        funcs.append(f)
    return funcs


def w1_dual_check(
    weights, cand_embeddings: np.ndarray, src_embeddings: np.ndarray, trial_functions
) -> float:
    """Best dual objective over 1-Lipschitz trial functions (lower bound on W1)."""
    cand = np.atleast_2d(np.asarray(cand_embeddings, dtype=float))
    src = np.atleast_2d(np.asarray(src_embeddings, dtype=float))
    w = _as_weight_vector(weights, cand.shape[0])
    best = -np.inf
    for f in trial_functions:
        val = float(w @ np.asarray(f(cand), dtype=float).ravel()) - float(
            np.mean(np.asarray(f(src), dtype=float))
        )
        best = max(best, abs(val))
    return best
