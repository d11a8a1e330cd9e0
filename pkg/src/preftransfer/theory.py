"""Monte-Carlo checks of the rounding guarantees and empirical rate fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fw import frank_wolfe
from .kernels import KernelSpec, build_matrices_from_embeddings
from .model import CappedWeights, RunConfig
from .pipeline import run_pipeline
from .rounding import MmdSelectionMetric, bernoulli_round, greedy_repair
from .wasserstein import solve_joint_lp, w1_exact_1d


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    bound: float

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: observed={self.observed:.6g} bound={self.bound:.6g}"


def make_feasible_weights(pool_size: int, k: int, seed: int) -> CappedWeights:
    """A generic interior point of the capped simplex for Monte-Carlo checks."""
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(pool_size))
    cap = 1.0 / k
    # clip to the cap and redistribute the excess over unsaturated entries
    for _ in range(100):
        over = w > cap
        if not over.any():
            break
        excess = float((w[over] - cap).sum())
        w[over] = cap
        under = ~over
        w[under] += excess * w[under] / max(w[under].sum(), 1e-300)
    w = np.clip(w, 0.0, cap)
    w /= w.sum()
    return CappedWeights(w, k)


def selection_count_moments(
    w: CappedWeights, n_trials: int, seed: int
) -> tuple[float, float]:
    """Empirical mean and variance of the pre-repair selection size."""
    probs = np.clip(w.cap_k * w.w, 0.0, 1.0)
    rng = np.random.default_rng(seed)
    counts = (rng.random((n_trials, probs.size)) < probs).sum(axis=1)
    return float(counts.mean()), float(counts.var())


def rounding_rkhs_quantiles(
    embeddings: np.ndarray,
    w: CappedWeights,
    deltas,
    n_trials: int,
    seed: int,
    sigma: float = 1.0,
    with_repair: bool = False,
) -> dict[float, float]:
    """Empirical (1-delta)-quantiles of the rounding perturbation RKHS norm.

    Without repair this is ||sum (w~ - w) phi||; with repair it is the
    post-repair perturbation ||sum (w~' - w~) phi||. Norms are exact via the
    kernel matrix.
    """
    mats = build_matrices_from_embeddings(embeddings, embeddings[:1], KernelSpec(sigma=sigma))
    k_tt = mats.k_tt
    probs = np.clip(w.cap_k * w.w, 0.0, 1.0)
    rng = np.random.default_rng(seed)
    size = probs.size
    k = w.cap_k

    if not with_repair:
        draws = rng.random((n_trials, size)) < probs
        diffs = draws / k - w.w[None, :]
        sq = np.einsum("ij,jk,ik->i", diffs, k_tt, diffs)
        norms = np.sqrt(np.maximum(sq, 0.0))
    else:
        metric = MmdSelectionMetric(mats)
        norms = np.empty(n_trials)
        for t in range(n_trials):
            raw = bernoulli_round(w, rng=rng)
            repaired = greedy_repair(raw, k, metric)
            d = np.zeros(size)
            d[sorted(repaired.indices)] += 1.0 / k
            d[sorted(raw)] -= 1.0 / k
            norms[t] = np.sqrt(max(float(d @ k_tt @ d), 0.0))

    norms.sort()
    return {
        float(delta): float(np.quantile(norms, 1.0 - delta)) for delta in deltas
    }


def rkhs_quantile_checks(
    deltas=(0.5, 0.25, 0.1),
    ks=(10, 50, 200),
    n_trials: int = 10_000,
    seed: int = 0,
    bound_b: float = 1.0,
    with_repair: bool = False,
) -> list[CheckResult]:
    results = []
    rng = np.random.default_rng(seed)
    tag = "post-repair" if with_repair else "pre-repair"
    for k in ks:
        size = 4 * k
        embeddings = rng.normal(size=(size, 3))
        w = make_feasible_weights(size, k, seed=seed + k)
        quants = rounding_rkhs_quantiles(
            embeddings, w, deltas, n_trials, seed + 7 * k, with_repair=with_repair
        )
        for delta, q in quants.items():
            bound = float(np.sqrt(bound_b / (delta * k)))
            results.append(
                CheckResult(
                    f"rkhs {tag} quantile K={k} delta={delta}", q <= bound, q, bound
                )
            )
    return results


def bounded_function_deviation_checks(
    k: int = 50,
    dim: int = 3,
    n_functions: int = 20,
    deltas=(0.5, 0.25, 0.1),
    n_trials: int = 10_000,
    seed: int = 0,
) -> list[CheckResult]:
    """Bernstein-style deviation of sum f(x_j)(w~_j - w_j) for bounded test
    functions |f| <= sqrt(d)/2 against sqrt(d/(2K) ln(1/d)) + sqrt(d)/(3K) ln(1/d)."""
    rng = np.random.default_rng(seed)
    size = 4 * k
    points = rng.uniform(size=(size, dim))
    w = make_feasible_weights(size, k, seed=seed + 1)
    probs = np.clip(k * w.w, 0.0, 1.0)
    half_range = np.sqrt(dim) / 2.0

    draws = rng.random((n_trials, size)) < probs
    diffs = draws / k - w.w[None, :]

    results = []
    for fi in range(n_functions):
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        offset = rng.normal(scale=0.3)
        values = np.clip(points @ direction + offset, -half_range, half_range)
        devs = diffs @ values
        devs.sort()
        for delta in deltas:
            bound = float(
                np.sqrt(dim / (2.0 * k) * np.log(1.0 / delta))
                + np.sqrt(dim) / (3.0 * k) * np.log(1.0 / delta)
            )
            q = float(np.quantile(devs, 1.0 - delta))
            results.append(
                CheckResult(
                    f"bounded-fn deviation f{fi} delta={delta}", q <= bound, q, bound
                )
            )
    return results


def _gaussian_mixture(rng, n, dim):
    centers = np.array([[1.5] * dim, [-1.5] * dim, [1.5, -1.5] * (dim // 2) or [1.5]])
    centers = centers[:, :dim]
    idx = rng.integers(0, centers.shape[0], size=n)
    return centers[idx] + rng.normal(size=(n, dim))


def mmd_regret_slope(
    k_list=(4, 8, 16, 32, 64),
    pool_size: int = 400,
    n_source: int = 120,
    dim: int = 4,
    fw_iters: int = 400,
    trials: int = 20,
    repeats: int = 3,
    seed: int = 0,
) -> float:
    """Least-squares log-log slope of (pipeline MMD - continuous bound) vs K."""
    regrets = np.zeros(len(k_list))
    for rep in range(repeats):
        rng = np.random.default_rng(seed + rep)
        cand = _gaussian_mixture(rng, pool_size, dim)
        src = _gaussian_mixture(rng, n_source, dim)
        for i, k in enumerate(k_list):
            config = RunConfig(
                k=k, fw_iters=fw_iters, rounding_trials=trials,
                seed=seed + 100 * rep + k, metric="mmd", sigma=1.0,
            )
            res = run_pipeline(cand, src, config)
            regrets[i] += max(res.achieved_distance - res.continuous_value, 1e-12)
    regrets /= repeats
    return _loglog_slope(np.array(k_list, dtype=float), regrets)


def w1_regret_slope_1d(
    k_list=(4, 8, 16, 32),
    pool_size: int = 200,
    n_source: int = 64,
    trials: int = 10,
    repeats: int = 3,
    seed: int = 0,
) -> float:
    """Log-log slope of the W1 pipeline regret on 1-D synthetic data.

    Uses the exact 1-D transport formula as the rounding metric so the sweep
    stays fast; the flow solver is cross-checked against the same formula in
    the test suite.
    """
    from .rounding import CallableSelectionMetric, round_repeat_best

    regrets = np.zeros(len(k_list))
    for rep in range(repeats):
        rng = np.random.default_rng(seed + rep)
        cand = np.sort(rng.uniform(size=(pool_size, 1)), axis=0)
        src = rng.uniform(size=(n_source, 1))
        cand_x = cand.ravel()
        src_x = src.ravel()
        src_w = np.full(n_source, 1.0 / n_source)
        for i, k in enumerate(k_list):
            weights, opt = solve_joint_lp(cand, src, k)

            def dist(idx, k=k):
                idx = np.asarray(idx, dtype=int)
                w = np.full(idx.size, 1.0 / idx.size)
                return w1_exact_1d(cand_x[idx], w, src_x, src_w)

            metric = CallableSelectionMetric(pool_size, dist)
            best = round_repeat_best(weights, metric, trials, seed + 31 * rep + k)
            regrets[i] += max(best.distance - opt, 1e-12)
    regrets /= repeats
    return _loglog_slope(np.array(k_list, dtype=float), regrets)


def _loglog_slope(xs: np.ndarray, ys: np.ndarray) -> float:
    lx, ly = np.log(xs), np.log(np.maximum(ys, 1e-300))
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)


def run_all_checks(seed: int = 0, n_trials: int = 10_000) -> list[CheckResult]:
    """The full synthetic verification suite, one result line per check."""
    results: list[CheckResult] = []

    w = make_feasible_weights(200, 20, seed=seed)
    mean, var = selection_count_moments(w, n_trials, seed + 1)
    results.append(CheckResult("selection count mean", abs(mean - 20) <= 0.15, mean, 20.0))
    results.append(CheckResult("selection count variance", var <= 1.1 * 20, var, 1.1 * 20))

    results.extend(rkhs_quantile_checks(seed=seed + 2, n_trials=n_trials))
    results.extend(rkhs_quantile_checks(seed=seed + 3, n_trials=n_trials, with_repair=True))
    results.extend(bounded_function_deviation_checks(seed=seed + 4, n_trials=n_trials))

    slope = mmd_regret_slope(seed=seed + 5)
    results.append(CheckResult("mmd regret slope", slope <= -0.35, slope, -0.35))
    slope_w1 = w1_regret_slope_1d(seed=seed + 6)
    results.append(CheckResult("w1 regret slope (d=1)", slope_w1 <= -0.25, slope_w1, -0.25))
    return results
