"""Synthetic trait tables with planted cluster structure.

Centres are drawn uniformly in a box and rejected until every pair is at
least ``separation * sigma`` apart.  Points scatter around their centre with
per-coordinate scale ``sigma``: Gaussian by default, Student-t for
heavy-tailed data.  Rows are shuffled so clusters are interleaved in file
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ConfigError

MAX_TRIES = 10_000


@dataclass(frozen=True)
class Blobs:
    values: np.ndarray
    labels: np.ndarray
    centers: np.ndarray

    @property
    def unit_ids(self) -> tuple[str, ...]:
        return tuple(f"g{i + 1}" for i in range(self.values.shape[0]))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"t{j + 1}" for j in range(self.values.shape[1]))

    def to_csv(self, fh) -> None:
        fh.write("genotype," + ",".join(self.names) + "\n")
        for uid, row in zip(self.unit_ids, self.values):
            fh.write(uid + "," + ",".join(f"{v:.10g}" for v in row) + "\n")

    def labels_csv(self, fh) -> None:
        fh.write("unit_id,cluster\n")
        for uid, c in zip(self.unit_ids, self.labels):
            fh.write(f"{uid},{int(c)}\n")


def place_centers(k: int, m: int, separation: float, sigma: float, rng, box: float | None = None) -> np.ndarray:
    if box is None:
        box = 2.0 * separation * sigma * max(1.0, k ** (1.0 / m))
    for _ in range(MAX_TRIES):
        centers = rng.uniform(0.0, box, size=(k, m))
        if k < 2 or pdist(centers).min() >= separation * sigma:
            return centers
    raise ConfigError(f"could not place {k} centres {separation} sigma apart in {m} dimensions")


def make_blobs(
    n: int,
    m: int,
    k: int,
    separation: float = 6.0,
    sigma: float = 1.0,
    rng: np.random.Generator | int | None = 0,
    tail: str = "gaussian",
    df: float = 2.0,
    weights=None,
    box: float | None = None,
    offset: float = 10.0,
) -> Blobs:
    """``n`` points in ``m`` dimensions around ``k`` well-separated centres.

    ``weights`` sets relative cluster sizes (balanced by default).  ``offset``
    shifts every coordinate so traits are positive, like measured data.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if k < 1 or n < k or m < 1:
        raise ConfigError(f"need n >= k >= 1 and m >= 1 (got n={n}, m={m}, k={k})")
    if tail not in ("gaussian", "student_t"):
        raise ConfigError(f"unknown tail {tail!r}")
    centers = place_centers(k, m, separation, sigma, rng, box) + offset
    if weights is None:
        sizes = np.full(k, n // k)
        sizes[: n % k] += 1
    else:
        w = np.asarray(weights, dtype=float)
        sizes = np.floor(n * w / w.sum()).astype(int)
        sizes[: n - sizes.sum()] += 1
    labels = np.repeat(np.arange(k), sizes)
    if tail == "gaussian":
        noise = rng.normal(size=(n, m))
    else:
        noise = rng.standard_t(df, size=(n, m))
    values = centers[labels] + sigma * noise
    order = rng.permutation(n)
    return Blobs(values[order], labels[order], centers)
