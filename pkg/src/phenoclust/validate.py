"""Silhouette values and cluster-size distribution reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .simgraph import cross_distances

VARIANTS = ("pooled", "classical")
BLOCK = 1024


@dataclass(frozen=True)
class SilhouetteReport:
    per_point: np.ndarray
    labels: np.ndarray
    cluster_ids: np.ndarray
    cluster_means: np.ndarray
    sizes: np.ndarray
    overall: float
    variant: str
    measure: str
    extra: dict = field(default_factory=dict)

    @property
    def singleton_clusters(self) -> list[int]:
        return [int(c) for c, s in zip(self.cluster_ids, self.sizes) if s == 1]

    @property
    def size_skew(self) -> float:
        """Largest cluster size over the median cluster size."""
        return float(self.sizes.max() / np.median(self.sizes))

    @property
    def size_ratio(self) -> float:
        """Largest over smallest non-empty cluster."""
        return float(self.sizes.max() / self.sizes.min())

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "variant": self.variant,
            "overall": self.overall,
            "n_points": int(self.per_point.size),
            "n_clusters": int(self.cluster_ids.size),
            "clusters": [
                {"cluster": int(c), "size": int(s), "mean_silhouette": float(m)}
                for c, s, m in zip(self.cluster_ids, self.sizes, self.cluster_means)
            ],
            "singleton_clusters": self.singleton_clusters,
            "singleton_count": len(self.singleton_clusters),
            "size_skew_max_over_median": self.size_skew,
            "size_ratio_max_over_min": self.size_ratio,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            f"silhouette ({self.variant} b, {self.measure}): overall {self.overall:.4f}",
            f"{'cluster':>8} {'size':>8} {'mean s':>10}",
        ]
        for c, s, m in zip(self.cluster_ids, self.sizes, self.cluster_means):
            flag = "  singleton" if s == 1 else ""
            lines.append(f"{int(c):>8} {int(s):>8} {m:>10.4f}{flag}")
        lines.append(
            f"singletons: {len(self.singleton_clusters)}; "
            f"max/median size {self.size_skew:.2f}; max/min size {self.size_ratio:.2f}"
        )
        if self.extra.get("sample_singleton_clusters"):
            lines.append(f"singleton clusters in the sample: {self.extra['sample_singleton_clusters']}")
        return "\n".join(lines) + "\n"

    def histogram_csv(self, fh, header_comment: str | None = None) -> None:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("cluster,size\n")
        for c, s in zip(self.cluster_ids, self.sizes):
            fh.write(f"{int(c)},{int(s)}\n")


def silhouette(
    rows,
    labels,
    measure: str = "euclidean",
    variant: str = "pooled",
    distances: np.ndarray | None = None,
) -> SilhouetteReport:
    """Per-point silhouette ``s = (b - a) / max(a, b)``.

    ``a`` is the mean distance to the other members of the point's cluster
    (0 for a singleton, which therefore scores 1).  With ``variant="pooled"``
    ``b`` is the mean distance to every point outside the cluster; with
    ``"classical"`` it is the smallest mean distance to any one other
    cluster.  When ``a = b = 0`` the score is 0.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown silhouette variant {variant!r}; choose from {VARIANTS}")
    labels = np.asarray(labels)
    n = labels.size
    cluster_ids, inverse = np.unique(labels, return_inverse=True)
    c = cluster_ids.size
    if c < 2:
        raise DataError("silhouette needs at least 2 non-empty clusters")
    onehot = np.zeros((n, c))
    onehot[np.arange(n), inverse] = 1.0
    sizes = onehot.sum(axis=0)
    if distances is not None:
        D = np.asarray(distances, dtype=float)
        if D.shape != (n, n):
            raise DataError(f"{n} labels for a {D.shape} distance matrix")
        sums = D @ onehot
    else:
        X = np.asarray(getattr(rows, "values", rows), dtype=float)
        if X.shape[0] != n:
            raise DataError(f"{n} labels for {X.shape[0]} rows")
        sums = np.empty((n, c))
        for start in range(0, n, BLOCK):
            block = cross_distances(X[start : start + BLOCK], X, measure)
            # The self-distance must be exactly zero for a(i) to be right.
            block[np.arange(block.shape[0]), np.arange(start, start + block.shape[0])] = 0.0
            sums[start : start + BLOCK] = block @ onehot
    own_size = sizes[inverse]
    own_sum = sums[np.arange(n), inverse]
    a = np.where(own_size > 1, own_sum / np.maximum(own_size - 1, 1), 0.0)
    if variant == "pooled":
        b = (sums * (1.0 - onehot)).sum(axis=1) / (n - own_size)
    else:
        means = sums / sizes
        means[np.arange(n), inverse] = np.inf
        b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(denom > 0, (b - a) / denom, 0.0)
    cluster_means = np.bincount(inverse, weights=s, minlength=c) / sizes
    return SilhouetteReport(
        per_point=s,
        labels=labels,
        cluster_ids=cluster_ids,
        cluster_means=cluster_means,
        sizes=sizes.astype(int),
        overall=float(s.mean()),
        variant=variant,
        measure=measure,
    )
