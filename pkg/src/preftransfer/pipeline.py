"""End-to-end selection: continuous optimization plus randomized rounding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fw import frank_wolfe
from .kernels import KernelSpec, build_matrices_from_embeddings
from .model import CappedWeights, RunConfig, Selection
from .rounding import (
    CallableSelectionMetric,
    MmdSelectionMetric,
    RoundingOutcome,
    round_repeat_best,
)
from .wasserstein import euclidean_costs, solve_joint_lp, w1_fixed


@dataclass(frozen=True)
class PipelineResult:
    selection: Selection
    weights: CappedWeights
    continuous_value: float
    achieved_distance: float
    outcome: RoundingOutcome
    metric: str


def selection_metric(metric: str, cand: np.ndarray, src: np.ndarray, config: RunConfig):
    """Distance-to-source evaluator for arbitrary candidate selections."""
    if metric == "mmd":
        mats = build_matrices_from_embeddings(
            cand, src, KernelSpec(sigma=config.sigma, bound=config.kernel_bound)
        )
        return MmdSelectionMetric(mats)
    costs = euclidean_costs(cand, src)
    return CallableSelectionMetric(
        cand.shape[0], lambda idx: w1_fixed(np.asarray(idx, dtype=int), costs)
    )


def run_pipeline(
    cand_embeddings: np.ndarray, src_embeddings: np.ndarray, config: RunConfig
) -> PipelineResult:
    """Optimize capped weights, round repeatedly, and keep the best selection."""
    cand = np.atleast_2d(np.asarray(cand_embeddings, dtype=float))
    src = np.atleast_2d(np.asarray(src_embeddings, dtype=float))
    if config.k > cand.shape[0]:
        raise ValueError(f"K={config.k} exceeds pool size {cand.shape[0]}")

    if config.metric == "mmd":
        spec = KernelSpec(sigma=config.sigma, bound=config.kernel_bound)
        mats = build_matrices_from_embeddings(cand, src, spec)
        weights, trace = frank_wolfe(mats, config.k, config.fw_iters)
        continuous = float(np.sqrt(max(trace.best_objectives[-1], 0.0)))
        metric_eval = MmdSelectionMetric(mats)
    else:
        weights, continuous = solve_joint_lp(cand, src, config.k)
        costs = euclidean_costs(cand, src)
        metric_eval = CallableSelectionMetric(
            cand.shape[0], lambda idx: w1_fixed(np.asarray(idx, dtype=int), costs)
        )

    outcome = round_repeat_best(
        weights, metric_eval, config.rounding_trials, config.seed,
        exclusive=config.exclusive_labels,
    )
    return PipelineResult(
        selection=outcome.selection,
        weights=weights,
        continuous_value=continuous,
        achieved_distance=outcome.distance,
        outcome=outcome,
        metric=config.metric,
    )
