from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SAMPLED = "sampled"
REVERSE_MAPPED = "reverse_mapped"


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster label per unit, with where each label came from.

    ``positions`` index rows of the source table; ``labels`` lie in
    ``[0, k)``.  Clusters that ended up empty are kept in ``k`` and listed by
    :attr:`empty_clusters` rather than silently renumbered.
    """

    positions: np.ndarray
    labels: np.ndarray
    k: int
    provenance: tuple[str, ...]
    unit_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.intp)
        lab = np.asarray(self.labels, dtype=np.intp)
        if pos.shape != lab.shape or len(self.provenance) != pos.size:
            raise ValueError("positions, labels and provenance must have equal length")
        if np.unique(pos).size != pos.size:
            raise ValueError("a unit is labelled more than once")
        if lab.size and (lab.min() < 0 or lab.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        pos.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "labels", lab)

    @property
    def size(self) -> int:
        return self.positions.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    @property
    def empty_clusters(self) -> list[int]:
        return [int(c) for c in np.flatnonzero(self.sizes == 0)]

    def labels_by_position(self, n: int) -> np.ndarray:
        """Dense label vector over ``n`` units, ``-1`` where unlabelled."""
        out = np.full(n, -1, dtype=np.intp)
        out[self.positions] = self.labels
        return out

    def to_csv(self, fh, header_comment: str | None = None) -> None:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("unit_id,cluster,provenance\n")
        order = np.argsort(self.positions, kind="stable")
        for i in order:
            p = int(self.positions[i])
            uid = self.unit_ids[p] if self.unit_ids is not None else str(p)
            fh.write(f"{uid},{int(self.labels[i])},{self.provenance[i]}\n")


def canonical_labels(labels: np.ndarray, k: int | None = None) -> tuple[np.ndarray, int]:
    """Renumber labels by first appearance so equal partitions compare equal."""
    labels = np.asarray(labels).ravel()
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first, kind="stable"), kind="stable")
    return rank[inverse].astype(np.intp), first.size if k is None else k


def same_partition(a, b) -> bool:
    a, _ = canonical_labels(a)
    b, _ = canonical_labels(b)
    return a.shape == b.shape and bool(np.all(a == b))
