"""Lloyd's k-means with k-means++ seeding and best-of-R restarts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

MAX_ITER = 300
TOL = 1e-8


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # Clamped: the expansion can go slightly negative for coincident points.
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    first = rng.integers(n)
    centers = [X[first]]
    closest = _sq_dists(X, X[first][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # Fewer distinct points than k: any point is as good as another.
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        closest = np.minimum(closest, _sq_dists(X, X[idx][None, :])[:, 0])
    return np.array(centers)


def lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int = MAX_ITER, tol: float = TOL) -> KMeansResult:
    centroids = centroids.copy()
    k = centroids.shape[0]
    for it in range(1, max_iter + 1):
        d = _sq_dists(X, centroids)
        labels = d.argmin(axis=1)
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, X)
        new = centroids.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            # Re-seed empty clusters at the points worst served by their centroid.
            worst = np.argsort(-d[np.arange(len(X)), labels], kind="stable")
            new[empty] = X[worst[: empty.size]]
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol and not empty.size:
            break
    d = _sq_dists(X, centroids)
    labels = d.argmin(axis=1)
    inertia = float(d[np.arange(len(X)), labels].sum())
    return KMeansResult(labels, centroids, inertia, it)


def kmeans(
    X: np.ndarray,
    k: int,
    rng: np.random.Generator,
    restarts: int = 10,
    max_iter: int = MAX_ITER,
    tol: float = TOL,
) -> KMeansResult:
    """Cluster the rows of ``X`` into ``k`` groups.

    Runs ``restarts`` independent k-means++ initialisations and keeps the one
    with the smallest within-cluster sum of squares.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    if k > X.shape[0]:
        raise ConfigError(f"k={k} exceeds the number of points ({X.shape[0]})")
    best: KMeansResult | None = None
    for _ in range(max(1, restarts)):
        result = lloyd(X, kmeans_plusplus(X, k, rng), max_iter=max_iter, tol=tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best
