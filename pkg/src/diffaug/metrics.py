"""Generative quality metrics on a feature space.

k-NN hypersphere manifolds give Improved Precision/Recall; FID compares
Gaussian fits.  Nearest neighbours are exact brute force.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .features import FeatureSet


def _as_features(points) -> np.ndarray:
    if isinstance(points, FeatureSet):
        return points.features
    X = np.asarray(points, dtype=np.float64)
    return X.reshape(-1, 1) if X.ndim == 1 else X


@dataclass(frozen=True)
class ManifoldModel:
    points: np.ndarray
    k: int
    radii: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]


def pairwise_distances(A, B) -> np.ndarray:
    return cdist(_as_features(A), _as_features(B), metric="euclidean")


def knn_radii(X: np.ndarray, k: int, block: int = 1024) -> np.ndarray:
    n = X.shape[0]
    radii = np.empty(n)
    for start in range(0, n, block):
        D = cdist(X[start:start + block], X)
        rows = np.arange(D.shape[0])
        D[rows, start + rows] = np.inf
        # column k-1 after excluding self; the value is tie-independent
        radii[start:start + block] = np.partition(D, k - 1, axis=1)[:, k - 1]
    return radii


def build_manifold(points, k: int = 3) -> ManifoldModel:
    """Per-point distance to the k-th nearest other point."""
    X = _as_features(points)
    if k < 1:
        raise ValueError("k must be positive")
    if X.shape[0] < k + 1:
        raise ValueError(f"need at least k+1 = {k + 1} points, got {X.shape[0]}")
    return ManifoldModel(X.copy(), int(k), knn_radii(X, k))


def _coverage(manifold: ManifoldModel, queries, block: int = 1024) -> np.ndarray:
    Q = _as_features(queries)
    if Q.shape[0] == 0:
        raise ValueError("empty query set")
    if Q.shape[1] != manifold.points.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {manifold.points.shape[1]}")
    inside = np.empty(Q.shape[0], dtype=bool)
    for start in range(0, Q.shape[0], block):
        D = cdist(Q[start:start + block], manifold.points)
        inside[start:start + block] = np.any(D <= manifold.radii[None, :], axis=1)
    return inside


def improved_precision(real_manifold: ManifoldModel, gen_features) -> float:
    """Fraction of generated vectors inside at least one real hypersphere."""
    return float(np.mean(_coverage(real_manifold, gen_features)))


def improved_recall(gen_manifold: ManifoldModel, real_features) -> float:
    """Fraction of real vectors inside at least one generated hypersphere."""
    return float(np.mean(_coverage(gen_manifold, real_features)))


def improved_f1(p: float, r: float) -> float:
    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValueError("precision and recall must lie in [0, 1]")
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class GaussianStats:
    mu: np.ndarray
    sigma: np.ndarray


def gaussian_stats(features) -> GaussianStats:
    """Sample mean and unbiased (n-1) covariance."""
    X = _as_features(features)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 points for a covariance")
    mu = X.mean(axis=0)
    C = X - mu
    sigma = C.T @ C / (X.shape[0] - 1)
    return GaussianStats(mu, 0.5 * (sigma + sigma.T))


def matrix_sqrt_spd(A, tol: float = 1e-10) -> np.ndarray:
    """Symmetric square root via eigendecomposition; small negative eigenvalues clamp to 0."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    if w.size and w.min() < -tol * scale:
        raise ValueError(f"matrix is indefinite (eigenvalue {w.min():.3e})")
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return 0.5 * (root + root.T)


def fid(real_stats: GaussianStats, gen_stats: GaussianStats) -> float:
    """Frechet distance between two Gaussian fits, clamped at 0."""
    mu_r, mu_g = np.atleast_1d(real_stats.mu), np.atleast_1d(gen_stats.mu)
    S_r, S_g = np.atleast_2d(real_stats.sigma), np.atleast_2d(gen_stats.sigma)
    if mu_r.shape != mu_g.shape or S_r.shape != S_g.shape:
        raise ValueError("dimension mismatch between statistics")
    root_r = matrix_sqrt_spd(S_r)
    inner = root_r @ S_g @ root_r
    cross = np.trace(matrix_sqrt_spd(0.5 * (inner + inner.T), tol=1e-8))
    diff = mu_r - mu_g
    value = float(diff @ diff + np.trace(S_r) + np.trace(S_g) - 2.0 * cross)
    return max(value, 0.0)


@dataclass(frozen=True)
class QualityReport:
    fid: float
    improved_precision: float
    improved_recall: float
    improved_f1: float

    def to_dict(self) -> dict:
        return {"fid": self.fid, "improved_precision": self.improved_precision,
                "improved_recall": self.improved_recall, "improved_f1": self.improved_f1}


def quality_report(real_features, gen_features, k: int = 3) -> QualityReport:
    real = _as_features(real_features)
    gen = _as_features(gen_features)
    p = improved_precision(build_manifold(real, k), gen)
    r = improved_recall(build_manifold(gen, k), real)
    return QualityReport(fid(gaussian_stats(real), gaussian_stats(gen)), p, r, improved_f1(p, r))
