"""Per-class statistics of predicted probabilities and directed Mahalanobis distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve


class DistanceError(ArithmeticError):
    pass


def ridge(cov: np.ndarray) -> float:
    """Relative ridge: ``max(1e-6 * trace/M, 1e-10)``."""
    m = cov.shape[0]
    return max(1e-6 * float(np.trace(cov)) / m, 1e-10)


@dataclass(frozen=True)
class ClassStats:
    means: np.ndarray  # (M, M): row c is the mean probability vector of class c
    covs: np.ndarray  # (M, M, M): covs[c] is the covariance of class c
    eps: np.ndarray  # (M,): ridge added to each covariance before solving


def class_mean(probs: np.ndarray, idx) -> np.ndarray:
    idx = np.asarray(idx)
    if idx.size == 0:
        raise ValueError("empty class: cannot take a mean")
    return probs[idx].mean(axis=0)


def class_covariance(probs: np.ndarray, idx, mean: np.ndarray) -> np.ndarray:
    """Biased (divide by N) covariance of the selected probability rows."""
    idx = np.asarray(idx)
    dev = probs[idx] - mean
    cov = dev.T @ dev / idx.size
    return (cov + cov.T) / 2


def class_stats(probs: np.ndarray, class_indices: Sequence[np.ndarray]) -> ClassStats:
    means = np.stack([class_mean(probs, ix) for ix in class_indices])
    covs = np.stack([class_covariance(probs, ix, mu) for ix, mu in zip(class_indices, means)])
    eps = np.array([ridge(s) for s in covs])
    return ClassStats(means, covs, eps)


def mahalanobis(mean_i, mean_j, cov_i, eps: Optional[float] = None) -> float:
    """Distance from ``mean_i`` to ``mean_j`` under ``cov_i + eps*I`` (Cholesky solve).

    ``eps`` defaults to :func:`ridge` of ``cov_i``.
    """
    mean_i = np.asarray(mean_i, dtype=np.float64)
    mean_j = np.asarray(mean_j, dtype=np.float64)
    cov_i = np.asarray(cov_i, dtype=np.float64)
    m = mean_i.shape[0]
    if mean_j.shape != (m,) or cov_i.shape != (m, m):
        raise ValueError(f"dimension mismatch: {mean_i.shape}, {mean_j.shape}, {cov_i.shape}")
    diff = mean_j - mean_i
    if not diff.any():
        return 0.0
    if eps is None:
        eps = ridge(cov_i)
    try:
        factor = cho_factor(cov_i + eps * np.eye(m), lower=True)
    except LinAlgError as exc:
        raise DistanceError(f"covariance not positive definite after ridge eps={eps:g}") from exc
    q = float(diff @ cho_solve(factor, diff))
    if not np.isfinite(q):
        raise DistanceError("non-finite Mahalanobis distance")
    return float(np.sqrt(max(q, 0.0)))


def distance_matrix(stats: ClassStats) -> np.ndarray:
    """``D[i, j]`` is the directed distance from class ``i`` to ``j`` under class ``i``'s covariance."""
    m = stats.means.shape[0]
    out = np.zeros((m, m))
    for i in range(m):
        try:
            factor = cho_factor(stats.covs[i] + stats.eps[i] * np.eye(m), lower=True)
        except LinAlgError as exc:
            raise DistanceError(f"class {i}: covariance not positive definite") from exc
        diff = stats.means - stats.means[i]
        q = np.einsum("jk,jk->j", diff, cho_solve(factor, diff.T).T)
        out[i] = np.sqrt(np.maximum(q, 0.0))
        out[i, i] = 0.0
    if not np.isfinite(out).all():
        raise DistanceError("non-finite entry in distance matrix")
    return out


def distances_from_probs(probs: np.ndarray, class_indices: Sequence[np.ndarray]) -> np.ndarray:
    return distance_matrix(class_stats(probs, class_indices))
