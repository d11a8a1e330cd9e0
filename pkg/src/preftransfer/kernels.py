"""Gaussian kernel, kernel matrices, and exact squared-MMD evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CandidatePool, CappedWeights, PreferenceSet

NEG_CLAMP = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel exp(-||x - x'||^2 / (2 sigma^2)); bounded by ``bound``."""

    sigma: float = 1.0
    bound: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.bound <= 0:
            raise ValueError("bound must be positive")


def gauss_kernel(x: np.ndarray, y: np.ndarray, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    sq = float(np.dot(x - y, x - y))
    return float(np.exp(-sq / (2.0 * spec.sigma**2)))


def gauss_kernel_matrix(xs: np.ndarray, ys: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Pairwise kernel matrix between row sets ``xs`` and ``ys``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape[1] != ys.shape[1]:
        raise ValueError(f"dimension mismatch: {xs.shape[1]} vs {ys.shape[1]}")
    sq = (
        np.sum(xs**2, axis=1)[:, None]
        + np.sum(ys**2, axis=1)[None, :]
        - 2.0 * xs @ ys.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * spec.sigma**2))


@dataclass(frozen=True)
class KernelMatrices:
    """Kernel blocks of the MMD quadratic: candidate/candidate, candidate/source.

    The source/source block enters the objective only through its scalar
    average, stored as ``ss_const``; the full n x n matrix is never kept.
    """

    k_tt: np.ndarray
    k_st: np.ndarray
    ss_const: float

    @property
    def pool_size(self) -> int:
        return self.k_tt.shape[0]

    @property
    def source_size(self) -> int:
        return self.k_st.shape[1]

    @property
    def cross_mean(self) -> np.ndarray:
        """(1/n) * K_ST @ 1, the per-candidate mean kernel to the source."""
        return self.k_st.mean(axis=1)


def build_matrices(pool: CandidatePool, source: PreferenceSet, spec: KernelSpec) -> KernelMatrices:
    return build_matrices_from_embeddings(pool.embeddings(), source.embeddings(), spec)


def build_matrices_from_embeddings(
    cand: np.ndarray, src: np.ndarray, spec: KernelSpec
) -> KernelMatrices:
    cand = np.atleast_2d(np.asarray(cand, dtype=float))
    src = np.atleast_2d(np.asarray(src, dtype=float))
    k_tt = gauss_kernel_matrix(cand, cand, spec)
    k_st = gauss_kernel_matrix(cand, src, spec)
    k_ss = gauss_kernel_matrix(src, src, spec)
    ss_const = float(k_ss.mean())
    return KernelMatrices(k_tt=k_tt, k_st=k_st, ss_const=ss_const)


def mmd_squared_from_vector(w: np.ndarray, mats: KernelMatrices) -> float:
    """Squared MMD for an arbitrary weight vector over the candidates."""
    w = np.asarray(w, dtype=float)
    val = float(w @ mats.k_tt @ w - 2.0 * mats.cross_mean @ w + mats.ss_const)
    if val < -NEG_CLAMP:
        raise ValueError(f"squared MMD unexpectedly negative: {val}")
    return max(val, 0.0)


def mmd_squared(w: CappedWeights, mats: KernelMatrices) -> float:
    return mmd_squared_from_vector(w.w, mats)


def mmd(w: CappedWeights, mats: KernelMatrices) -> float:
    return float(np.sqrt(mmd_squared(w, mats)))


def mmd_gradient_from_vector(w: np.ndarray, mats: KernelMatrices) -> np.ndarray:
    return 2.0 * (mats.k_tt @ np.asarray(w, dtype=float)) - 2.0 * mats.cross_mean


def mmd_gradient(w: CappedWeights, mats: KernelMatrices) -> np.ndarray:
    return mmd_gradient_from_vector(w.w, mats)


def mmd_between_embeddings(
    xs: np.ndarray, ys: np.ndarray, spec: KernelSpec,
    w_x: np.ndarray | None = None, w_y: np.ndarray | None = None,
) -> float:
    """MMD between two weighted empirical measures given by embedding rows."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    w_x = np.full(xs.shape[0], 1.0 / xs.shape[0]) if w_x is None else np.asarray(w_x, float)
    w_y = np.full(ys.shape[0], 1.0 / ys.shape[0]) if w_y is None else np.asarray(w_y, float)
    k_xx = gauss_kernel_matrix(xs, xs, spec)
    k_xy = gauss_kernel_matrix(xs, ys, spec)
    k_yy = gauss_kernel_matrix(ys, ys, spec)
    val = float(w_x @ k_xx @ w_x - 2.0 * w_x @ k_xy @ w_y + w_y @ k_yy @ w_y)
    return float(np.sqrt(max(val, 0.0)))
