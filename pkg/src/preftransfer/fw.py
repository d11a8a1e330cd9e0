"""Frank-Wolfe minimization of the squared-MMD quadratic over the capped simplex."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelMatrices, mmd_gradient_from_vector, mmd_squared_from_vector
from .model import CappedWeights, uniform_capped_weights


@dataclass(frozen=True)
class FwTrace:
    """Per-iteration objective values and the best value seen so far."""

    objectives: np.ndarray
    best_objectives: np.ndarray
    final_gap: float

    @property
    def iterations(self) -> int:
        return self.objectives.size - 1


def lmo_capped_simplex(gradient: np.ndarray, k: int) -> np.ndarray:
    """Exact linear minimization over {w : sum w = 1, 0 <= w <= 1/K}.

    The vertices are uniform 1/K weights on K-subsets, so the minimizer puts
    1/K on the K smallest gradient entries. Ties break toward lower indices
    (stable sort) for determinism.
    """
    gradient = np.asarray(gradient, dtype=float)
    if k > gradient.size:
        raise ValueError(f"K={k} exceeds dimension {gradient.size}")
    order = np.argsort(gradient, kind="stable")
    w = np.zeros_like(gradient)
    w[order[:k]] = 1.0 / k
    return w


def frank_wolfe(
    mats: KernelMatrices, k: int, n_iters: int
) -> tuple[CappedWeights, FwTrace]:
    """Run Frank-Wolfe with the fixed 2/(t+2) schedule from the uniform start.

    The fixed schedule is not monotone, so the returned weights are the
    best-so-far iterate rather than the last one.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    size = mats.pool_size
    w = uniform_capped_weights(size, k).w.copy()

    objectives = np.empty(n_iters + 1)
    objectives[0] = mmd_squared_from_vector(w, mats)
    best_obj = objectives[0]
    best_w = w.copy()
    gap = np.inf

    for t in range(n_iters):
        grad = mmd_gradient_from_vector(w, mats)
        s = lmo_capped_simplex(grad, k)
        gap = float(grad @ (w - s))
        gamma = 2.0 / (t + 2.0)
        w = (1.0 - gamma) * w + gamma * s
        obj = mmd_squared_from_vector(w, mats)
        objectives[t + 1] = obj
        if obj < best_obj:
            best_obj = obj
            best_w = w.copy()

    # renormalize float drift before the invariant check
    best_w = np.clip(best_w, 0.0, 1.0 / k)
    best_w /= best_w.sum()
    trace = FwTrace(
        objectives=objectives,
        best_objectives=np.minimum.accumulate(objectives),
        final_gap=gap,
    )
    return CappedWeights(best_w, k), trace


def continuous_opt_value(mats: KernelMatrices, k: int, n_iters: int) -> float:
    """Best MMD (not squared) found by the Frank-Wolfe run; the reported bound."""
    _, trace = frank_wolfe(mats, k, n_iters)
    return float(np.sqrt(max(trace.best_objectives[-1], 0.0)))


def projected_gradient_reference(
    mats: KernelMatrices, k: int, tol: float = 1e-12, max_iters: int = 200_000
) -> float:
    """High-accuracy QP minimum used as an independent oracle in tests.

    Projected gradient descent with projection onto the capped simplex.
    """
    size = mats.pool_size
    w = np.full(size, 1.0 / size)
    lip = 2.0 * float(np.linalg.norm(mats.k_tt, 2))
    step = 1.0 / max(lip, 1e-12)
    prev = mmd_squared_from_vector(w, mats)
    for _ in range(max_iters):
        grad = mmd_gradient_from_vector(w, mats)
        w = project_capped_simplex(w - step * grad, k)
        obj = mmd_squared_from_vector(w, mats)
        if prev - obj < tol:
            return obj
        prev = obj
    return prev


def project_capped_simplex(v: np.ndarray, k: int) -> np.ndarray:
    """Euclidean projection onto {w : sum w = 1, 0 <= w <= 1/K} by bisection."""
    v = np.asarray(v, dtype=float)
    cap = 1.0 / k

    def shifted_sum(tau):
        return np.clip(v - tau, 0.0, cap).sum()

    lo = v.min() - 1.0
    hi = v.max()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if shifted_sum(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    w = np.clip(v - 0.5 * (lo + hi), 0.0, cap)
    # exact renormalization of residual bisection error
    free = (w > 0) & (w < cap)
    if free.any():
        w[free] += (1.0 - w.sum()) / free.sum()
    return np.clip(w, 0.0, cap)
