"""Graph Laplacians, their smallest eigenpairs, the eigengap rule, and
spectral clustering on the resulting embedding.

Three Laplacians are supported:

* ``type1``: unnormalized ``D - W``
* ``type2``: symmetric normalized ``I - D^-1/2 W D^-1/2``
* ``type3``: random walk ``I - D^-1 W`` (the default)

``type3`` is not symmetric.  Its eigenpairs are taken from the equivalent
symmetric-definite problem ``(D - W) u = lambda D u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assignment import SAMPLED, ClusterAssignment
from .errors import ConfigError, DataError, NumericalError
from .kmeans import kmeans
from .simgraph import SimilarityMatrix

KINDS = ("type1", "type2", "type3")
RESIDUAL_TOL = 1e-8
GAP_TIE_TOL = 1e-12


@dataclass(frozen=True)
class Laplacian:
    kind: str
    matrix: np.ndarray
    degrees: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralEmbedding:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    kind: str


def _weights(W) -> np.ndarray:
    return np.asarray(W.values if isinstance(W, SimilarityMatrix) else W, dtype=float)


def laplacian(W: SimilarityMatrix | np.ndarray, kind: str = "type3") -> Laplacian:
    if kind not in KINDS:
        raise ConfigError(f"unknown Laplacian kind {kind!r}; choose from {KINDS}")
    W = _weights(W)
    d = W.sum(axis=1)
    if np.any(d <= 0):
        raise DataError("similarity graph has a node with zero degree")
    n = W.shape[0]
    if kind == "type1":
        L = np.diag(d) - W
    elif kind == "type2":
        s = 1.0 / np.sqrt(d)
        L = np.eye(n) - s[:, None] * W * s[None, :]
        L = 0.5 * (L + L.T)
    else:
        L = np.eye(n) - W / d[:, None]
    return Laplacian(kind, L, d)


def _orient(vectors: np.ndarray) -> np.ndarray:
    # Eigenvectors are defined up to sign; fix it so runs are reproducible.
    idx = np.abs(vectors).argmax(axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def smallest_eigenpairs(L: Laplacian, count: int) -> SpectralEmbedding:
    """The ``count`` smallest eigenvalues (ascending) and unit-norm eigenvectors."""
    n = L.size
    if not 1 <= count <= n:
        raise ConfigError(f"eigenpair count must lie in [1, {n}], got {count}")
    subset = [0, count - 1]
    try:
        if L.kind == "type3":
            # D (I - D^-1 W) = D - W, symmetric; solve against the degree matrix.
            A = L.degrees[:, None] * L.matrix
            A = 0.5 * (A + A.T)
            vals, vecs = scipy.linalg.eigh(A, np.diag(L.degrees), subset_by_index=subset)
        else:
            vals, vecs = scipy.linalg.eigh(L.matrix, subset_by_index=subset)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed for {L.kind} Laplacian of size {n}: {exc}") from exc
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vecs = _orient(vecs / np.linalg.norm(vecs, axis=0))
    residual = np.linalg.norm(L.matrix @ vecs - vecs * vals, axis=0)
    scale = max(1.0, float(np.abs(L.matrix).sum(axis=1).max()))
    if np.any(residual > RESIDUAL_TOL * scale):
        raise NumericalError(
            f"eigenpairs of {L.kind} Laplacian (size {n}) did not converge: "
            f"max residual {residual.max():.3g}"
        )
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return SpectralEmbedding(vals, vecs, L.kind)


def eigengap_estimate_k(eigenvalues, k_max: int) -> int:
    """Number of clusters suggested by the largest gap among the first ``k_max`` eigenvalues.

    Returns ``i`` maximizing ``lambda_{i+1} - lambda_i`` for ``i`` in
    ``1 .. k_max - 1`` (1-based).  Gaps within ``1e-12`` of the maximum count
    as tied and the smallest ``i`` wins.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float), kind="stable")
    if lam.size < 2:
        raise DataError("need at least 2 eigenvalues to look for a gap")
    if not 2 <= k_max <= lam.size:
        raise ConfigError(f"k_max must lie in [2, {lam.size}], got {k_max}")
    gaps = np.diff(lam[:k_max])
    return int(np.flatnonzero(gaps >= gaps.max() - GAP_TIE_TOL)[0]) + 1


def embed(W: SimilarityMatrix | np.ndarray, count: int, kind: str = "type3") -> SpectralEmbedding:
    return smallest_eigenpairs(laplacian(W, kind), count)


def cluster_embedding(
    embedding: SpectralEmbedding,
    k: int,
    rng: np.random.Generator,
    restarts: int = 10,
    row_normalize: bool = False,
) -> np.ndarray:
    """k-means labels for the rows of the first ``k`` eigenvectors."""
    U = np.array(embedding.vectors[:, :k])
    if row_normalize:
        norms = np.linalg.norm(U, axis=1, keepdims=True)
        U = U / np.where(norms == 0, 1.0, norms)
    return kmeans(U, k, rng, restarts=restarts).labels


def spectral_cluster(
    W: SimilarityMatrix | np.ndarray,
    k: int,
    kind: str = "type3",
    rng: np.random.Generator | None = None,
    restarts: int = 10,
    row_normalize: bool = False,
    positions=None,
    unit_ids=None,
) -> ClusterAssignment:
    """Laplacian, then its ``k`` smallest eigenvectors, then k-means on their rows."""
    n = _weights(W).shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(0) if rng is None else rng
    if k == 1:
        labels = np.zeros(n, dtype=np.intp)
    else:
        labels = cluster_embedding(embed(W, k, kind), k, rng, restarts, row_normalize)
    positions = np.arange(n) if positions is None else np.asarray(positions)
    return ClusterAssignment(positions, labels, k, (SAMPLED,) * n, unit_ids)
