import itertools

import numpy as np
import pytest

from preftransfer.fw import (
    continuous_opt_value,
    frank_wolfe,
    lmo_capped_simplex,
    project_capped_simplex,
    projected_gradient_reference,
)
from preftransfer.kernels import KernelSpec, build_matrices_from_embeddings, mmd_squared_from_vector
from preftransfer.model import CappedWeights

SPEC = KernelSpec(sigma=1.0)


def random_mats(rng, pool=8, n_src=4, dim=2):
    return build_matrices_from_embeddings(
        rng.normal(size=(pool, dim)), rng.normal(size=(n_src, dim)), SPEC
    )


def test_lmo_two_smallest_entries():
    w = lmo_capped_simplex(np.array([3.0, 1.0, 2.0, 5.0]), 2)
    np.testing.assert_allclose(w, [0.0, 0.5, 0.5, 0.0])


def test_lmo_tie_break_lowest_index():
    w = lmo_capped_simplex(np.zeros(4), 2)
    np.testing.assert_allclose(w, [0.5, 0.5, 0.0, 0.0])


def test_lmo_is_vertex(rng):
    for _ in range(20):
        g = rng.normal(size=10)
        k = int(rng.integers(1, 11))
        w = lmo_capped_simplex(g, k)
        assert np.sum(w == 1.0 / k) == k
        assert np.sum(w == 0.0) == 10 - k


def test_lmo_beats_random_feasible_points(rng):
    g = rng.normal(size=8)
    k = 3
    best = float(g @ lmo_capped_simplex(g, k))
    for _ in range(1000):
        w = rng.dirichlet(np.ones(8))
        if w.max() > 1.0 / k:  # rejection-sample the capped simplex
            continue
        assert best <= g @ w + 1e-12


def test_fw_first_step_is_lmo_of_initial_gradient(rng):
    from preftransfer.kernels import mmd_gradient_from_vector

    mats = random_mats(rng)
    w0 = np.full(8, 1.0 / 8)
    s0 = lmo_capped_simplex(mmd_gradient_from_vector(w0, mats), 3)
    weights, trace = frank_wolfe(mats, 3, 1)
    # gamma_0 = 1, so the first iterate is exactly the LMO vertex
    assert trace.objectives[1] == pytest.approx(mmd_squared_from_vector(s0, mats), abs=1e-14)


def test_fw_iterates_feasible(rng):
    mats = random_mats(rng, pool=10)
    for k in (2, 5, 10):
        weights, _ = frank_wolfe(mats, k, 50)
        assert isinstance(weights, CappedWeights)  # construction enforces invariants
        assert weights.w.sum() == pytest.approx(1.0, abs=1e-9)
        assert weights.w.max() <= 1.0 / k + 1e-12


def test_fw_never_worse_than_start(rng):
    for _ in range(5):
        mats = random_mats(rng)
        _, trace = frank_wolfe(mats, 3, 100)
        assert trace.best_objectives[-1] <= trace.objectives[0] + 1e-15
        assert np.all(np.diff(trace.best_objectives) <= 1e-15)


def test_continuous_value_lower_bounds_exhaustive_optimum(rng):
    cand = rng.normal(size=(6, 2))
    src = rng.normal(size=(3, 2))
    mats = build_matrices_from_embeddings(cand, src, SPEC)
    k = 2
    value = continuous_opt_value(mats, k, 1000)
    best_comb = min(
        mmd_squared_from_vector(_subset_weights(6, subset), mats)
        for subset in itertools.combinations(range(6), k)
    )
    assert value <= np.sqrt(best_comb) + 1e-3


def _subset_weights(size, subset):
    w = np.zeros(size)
    w[list(subset)] = 1.0 / len(subset)
    return w


def test_zero_optimum_reached_when_source_representable(rng):
    pts = rng.normal(size=(6, 2))
    mats = build_matrices_from_embeddings(pts, pts[:3], SPEC)
    # uniform 1/3 on the three matching candidates is feasible for K = 3
    assert continuous_opt_value(mats, 3, 2000) == pytest.approx(0.0, abs=1e-4)


def test_fw_rate_against_projected_gradient_oracle(rng):
    # best-so-far suboptimality decays like 1/L on the squared objective
    mats = random_mats(rng, pool=12, n_src=5)
    k = 4
    opt = projected_gradient_reference(mats, k, tol=1e-14)
    gaps = []
    for n_iters in (10, 40, 160):
        _, trace = frank_wolfe(mats, k, n_iters)
        gaps.append(max(trace.best_objectives[-1] - opt, 1e-16))
    # fitted constant from the first point; later points must respect c/L
    c = gaps[0] * 10
    assert gaps[1] <= c / 40 + 1e-12
    assert gaps[2] <= c / 160 + 1e-12


def test_projection_onto_capped_simplex(rng):
    for _ in range(20):
        v = rng.normal(size=9)
        k = int(rng.integers(1, 10))
        w = project_capped_simplex(v, k)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)
        assert w.min() >= -1e-12 and w.max() <= 1.0 / k + 1e-12
