"""Agglomerative hierarchical clustering baseline.

The default engine is the plain matrix algorithm: every step scans the full
distance matrix for the closest pair and updates one row with the
Lance-Williams formula, O(N^3) overall.  The nearest-neighbour-chain engine
gives the same hierarchy for these (reducible) linkages in O(N^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import SAMPLED, ClusterAssignment, canonical_labels
from .errors import ConfigError
from .simgraph import check_measure, pairwise_distances

LINKAGES = ("single", "complete", "average", "ward")
ENGINES = ("naive", "nn_chain")


@dataclass(frozen=True)
class MergeHistory:
    """Merges in scipy ``linkage`` layout: rows of ``(a, b, height, size)``.

    Original units are ids ``0..N-1``; the cluster formed at step ``s`` gets
    id ``N + s``.
    """

    merges: np.ndarray
    n: int
    linkage: str

    def cut(self, k: int) -> np.ndarray:
        """Labels after undoing all but the first ``N - k`` merges."""
        if not 1 <= k <= self.n:
            raise ConfigError(f"k must lie in [1, {self.n}], got {k}")
        if self.n - k > len(self.merges):
            raise ConfigError(f"history stops at {self.n - len(self.merges)} clusters; cannot cut at k={k}")
        parent = list(range(2 * self.n - 1))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for s in range(self.n - k):
            a, b = int(self.merges[s, 0]), int(self.merges[s, 1])
            parent[find(a)] = self.n + s
            parent[find(b)] = self.n + s
        roots = np.array([find(i) for i in range(self.n)])
        return canonical_labels(roots)[0]

    def to_csv(self, fh, header_comment: str | None = None) -> None:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("step,cluster_a,cluster_b,height\n")
        for s, (a, b, h, _) in enumerate(self.merges):
            fh.write(f"{s},{int(a)},{int(b)},{float(h)!r}\n")


def _lance_williams(linkage: str, dik, djk, dij, ni, nj, nk):
    if linkage == "single":
        return np.minimum(dik, djk)
    if linkage == "complete":
        return np.maximum(dik, djk)
    if linkage == "average":
        return (ni * dik + nj * djk) / (ni + nj)
    # ward, on squared distances
    return ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk)


def _prepare(D: np.ndarray, linkage: str) -> np.ndarray:
    D = np.array(D, dtype=float)
    if linkage == "ward":
        D = D * D
    np.fill_diagonal(D, np.inf)
    return D


def _merge(D, size, i, j, linkage, active):
    """Fold slot ``j`` into slot ``i`` and refresh row/column ``i``."""
    ni, nj = size[i], size[j]
    row = _lance_williams(linkage, D[i], D[j], D[i, j], ni, nj, size)
    row[~active] = np.inf
    row[i] = np.inf
    D[i, :] = row
    D[:, i] = row
    D[j, :] = np.inf
    D[:, j] = np.inf
    size[i] = ni + nj


def _naive(D: np.ndarray, linkage: str, stop_at: int) -> list[tuple[int, int, float]]:
    n = D.shape[0]
    D = _prepare(D, linkage)
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    out = []
    for _ in range(n - stop_at):
        # Row-major argmin of a symmetric matrix returns the smallest (i, j) with i < j.
        flat = int(np.argmin(D))
        i, j = divmod(flat, n)
        out.append((i, j, float(D[i, j])))
        active[j] = False
        _merge(D, size, i, j, linkage, active)
    return out


def _nn_chain(D: np.ndarray, linkage: str) -> list[tuple[int, int, float]]:
    n = D.shape[0]
    D = _prepare(D, linkage)
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    out = []
    chain: list[int] = []
    for _ in range(n - 1):
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        while True:
            a = chain[-1]
            row = D[a]
            b = int(np.argmin(row))
            if len(chain) > 1 and row[chain[-2]] <= row[b]:
                b = chain[-2]
            if len(chain) > 1 and b == chain[-2]:
                break
            chain.append(b)
        a, b = chain.pop(), chain.pop()
        i, j = min(a, b), max(a, b)
        out.append((i, j, float(D[i, j])))
        active[j] = False
        _merge(D, size, i, j, linkage, active)
    out.sort(key=lambda t: t[2])
    return out


def _to_history(raw: list[tuple[int, int, float]], n: int, linkage: str) -> MergeHistory:
    parent = np.arange(n)
    cluster_id = np.arange(n)
    size = np.ones(n, dtype=int)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    rows = []
    for s, (i, j, h) in enumerate(raw):
        ri, rj = find(i), find(j)
        a, b = sorted((int(cluster_id[ri]), int(cluster_id[rj])))
        height = float(np.sqrt(h)) if linkage == "ward" else h
        parent[rj] = ri
        size[ri] += size[rj]
        cluster_id[ri] = n + s
        rows.append((a, b, height, size[ri]))
    return MergeHistory(np.array(rows, dtype=float).reshape(-1, 4), n, linkage)


def _check_linkage(linkage: str, measure: str) -> None:
    if linkage not in LINKAGES:
        raise ConfigError(f"unknown linkage {linkage!r}; choose from {LINKAGES}")
    if linkage == "ward" and measure not in ("euclidean", "squared_euclidean"):
        raise ConfigError("ward linkage needs euclidean geometry (euclidean or squared_euclidean)")


def merge_history(
    rows: np.ndarray,
    measure: str = "euclidean",
    linkage: str = "average",
    engine: str = "naive",
    stop_at: int = 1,
    distances: np.ndarray | None = None,
) -> MergeHistory:
    """Agglomerate from singletons down to ``stop_at`` clusters.

    Ward always works on Euclidean distances (squared internally) and
    reports Euclidean-scale heights, whichever of the two Euclidean
    measures was requested.
    """
    check_measure(measure)
    _check_linkage(linkage, measure)
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}; choose from {ENGINES}")
    if distances is None:
        geometry = "euclidean" if linkage == "ward" else measure
        distances = pairwise_distances(np.asarray(getattr(rows, "values", rows), dtype=float), geometry)
    n = distances.shape[0]
    if engine == "naive":
        raw = _naive(distances, linkage, max(1, stop_at))
    else:
        raw = _nn_chain(distances, linkage)
    return _to_history(raw, n, linkage)


def hierarchical_cluster(
    rows: np.ndarray,
    measure: str = "euclidean",
    linkage: str = "average",
    k: int = 2,
    engine: str = "naive",
    positions=None,
    unit_ids=None,
    distances: np.ndarray | None = None,
) -> ClusterAssignment:
    """Cut the agglomerative hierarchy at ``k`` clusters.

    Ties between equally close pairs go to the smallest ``(i, j)`` slot pair.
    """
    X = np.asarray(getattr(rows, "values", rows), dtype=float)
    n = X.shape[0] if distances is None else distances.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k must lie in [1, {n}], got {k}")
    stop_at = k if engine == "naive" else 1
    history = merge_history(X, measure, linkage, engine, stop_at=stop_at, distances=distances)
    labels = history.cut(k) if n > 1 else np.zeros(n, dtype=np.intp)
    positions = np.arange(n) if positions is None else np.asarray(positions)
    return ClusterAssignment(positions, labels, k, (SAMPLED,) * n, unit_ids)
