"""Distance measures and the fully connected exp(-d) similarity graph."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, DataError

MEASURES = (
    "city_block",
    "euclidean",
    "squared_euclidean",
    "cosine",
    "correlation",
    "hamming",
    "jaccard",
)

_SCIPY_METRIC = {
    "city_block": "cityblock",
    "euclidean": "euclidean",
    "squared_euclidean": "sqeuclidean",
    "cosine": "cosine",
    "correlation": "correlation",
    "hamming": "hamming",
}

MAX_NODES = 20_000
BLOCK_ROWS = 256


def check_measure(measure: str) -> str:
    if measure not in MEASURES:
        raise ConfigError(f"unknown distance measure {measure!r}; choose from {', '.join(MEASURES)}")
    return measure


def distance(a, b, measure: str) -> float:
    """Distance between two trait vectors, evaluated element by element.

    Hamming divides the count of differing positions by the vector length.
    Jaccard ignores positions where both vectors are zero and is 0 when no
    position is non-zero in either vector.
    """
    check_measure(measure)
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    if len(a) != len(b):
        raise DataError(f"length mismatch: {len(a)} vs {len(b)}")
    m = len(a)
    if measure == "city_block":
        return sum(abs(x - y) for x, y in zip(a, b))
    if measure == "squared_euclidean":
        return sum((x - y) ** 2 for x, y in zip(a, b))
    if measure == "euclidean":
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    if measure == "cosine":
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(y * y for y in b))
        if na == 0 or nb == 0:
            raise DataError("cosine distance is undefined for a zero vector")
        return max(0.0, 1.0 - sum(x * y for x, y in zip(a, b)) / (na * nb))
    if measure == "correlation":
        ma, mb = sum(a) / m, sum(b) / m
        ca = [x - ma for x in a]
        cb = [y - mb for y in b]
        va = math.sqrt(sum(x * x for x in ca))
        vb = math.sqrt(sum(y * y for y in cb))
        if va == 0 or vb == 0:
            raise DataError("correlation distance is undefined for a constant vector")
        return max(0.0, 1.0 - sum(x * y for x, y in zip(ca, cb)) / (va * vb))
    if measure == "hamming":
        return sum(x != y for x, y in zip(a, b)) / m
    # jaccard
    support = [x != 0 or y != 0 for x, y in zip(a, b)]
    total = sum(support)
    if total == 0:
        return 0.0
    return sum(s and x != y for s, x, y in zip(support, a, b)) / total


def _check_rows(X: np.ndarray, measure: str, offset: int = 0) -> None:
    if measure == "cosine":
        bad = np.flatnonzero(np.linalg.norm(X, axis=1) == 0)
        if bad.size:
            raise DataError(f"cosine distance undefined: row {int(bad[0]) + offset} is a zero vector")
    elif measure == "correlation":
        bad = np.flatnonzero(np.ptp(X, axis=1) == 0)
        if bad.size:
            raise DataError(f"correlation distance undefined: row {int(bad[0]) + offset} is constant")


def _jaccard(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # scipy's jaccard booleanizes its inputs; coded categories need value equality.
    out = np.empty((X.shape[0], Y.shape[0]))
    nzY = Y != 0
    step = max(1, 2**22 // max(1, Y.size))
    for start in range(0, X.shape[0], step):
        x = X[start : start + step, None, :]
        support = (x != 0) | nzY[None]
        differ = (x != Y[None]) & support
        total = support.sum(axis=2)
        out[start : start + step] = differ.sum(axis=2) / np.maximum(total, 1)
    return out


def _cdist(X: np.ndarray, Y: np.ndarray, measure: str) -> np.ndarray:
    if measure == "jaccard":
        return _jaccard(X, Y)
    return cdist(X, Y, _SCIPY_METRIC[measure])


def cross_distances(X: np.ndarray, Y: np.ndarray, measure: str) -> np.ndarray:
    """Rectangular distance block between the rows of ``X`` and ``Y``."""
    check_measure(measure)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DataError(f"length mismatch: {X.shape[1]} vs {Y.shape[1]}")
    _check_rows(X, measure)
    _check_rows(Y, measure)
    d = _cdist(X, Y, measure)
    if measure in ("cosine", "correlation"):
        np.maximum(d, 0.0, out=d)
    return d


def pairwise_distances(X: np.ndarray, measure: str, workers: int = 1) -> np.ndarray:
    """Symmetric distance matrix with an exactly zero diagonal.

    Rows are processed in fixed blocks; each entry is computed on its own,
    so the result does not depend on ``workers``.
    """
    check_measure(measure)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("expected a 2-d array of rows")
    n = X.shape[0]
    _check_rows(X, measure)
    D = np.empty((n, n))
    starts = range(0, n, BLOCK_ROWS)

    def fill(start: int) -> None:
        stop = min(start + BLOCK_ROWS, n)
        D[start:stop] = _cdist(X[start:stop], X, measure)

    if workers > 1 and n > BLOCK_ROWS:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)
    if measure in ("cosine", "correlation"):
        np.maximum(D, 0.0, out=D)
    # Mirror the lower triangle so symmetry is exact.
    iu = np.triu_indices(n, 1)
    D[iu] = D.T[iu]
    np.fill_diagonal(D, 0.0)
    return D


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray
    measure: str

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def degrees(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def to_csv(self, fh) -> None:
        fh.write(f"# similarity matrix, measure={self.measure}, size={self.size}\n")
        for row in self.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def similarity_matrix(
    rows: np.ndarray, measure: str, workers: int = 1, max_nodes: int = MAX_NODES
) -> SimilarityMatrix:
    """Dense ``w_ij = exp(-d_ij)`` over all pairs of rows."""
    rows = np.asarray(getattr(rows, "values", rows), dtype=float)
    n = rows.shape[0]
    if n < 2:
        raise DataError("a similarity graph needs at least 2 nodes")
    if n > max_nodes:
        raise ConfigError(f"{n} nodes exceeds the dense-graph cap of {max_nodes}")
    W = np.exp(-pairwise_distances(rows, measure, workers=workers))
    W.setflags(write=False)
    return SimilarityMatrix(W, measure)
