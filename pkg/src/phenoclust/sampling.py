"""Fixed-size unequal-probability sampling and population-total estimators.

Inclusion probabilities are proportional to the inverse deviation of each
unit, so units close to the best value of every trait are favoured.  The
pivotal method then draws exactly ``N`` units in one sequential pass.  A
vector-quantization sampler is provided as a baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .kmeans import _sq_dists, kmeans

log = logging.getLogger(__name__)

# Probabilities this close to 0 or 1 are treated as decided.
EPS = 1e-12


@dataclass(frozen=True)
class InclusionPlan:
    probabilities: np.ndarray
    target_size: int

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1:
            raise ConfigError("inclusion probabilities must be a vector")
        if not (0 < self.target_size <= p.size):
            raise ConfigError(f"target size {self.target_size} outside [1, {p.size}]")
        if np.any(p <= 0) or np.any(p > 1 + 1e-12):
            raise ConfigError("inclusion probabilities must lie in (0, 1]")
        if abs(p.sum() - self.target_size) > 1e-9 * max(1, self.target_size):
            raise ConfigError(f"probabilities sum to {p.sum()!r}, expected {self.target_size}")
        p = np.minimum(p, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def n(self) -> int:
        return self.probabilities.size

    @classmethod
    def census(cls, n: int) -> "InclusionPlan":
        return cls(np.ones(n), n)

    @classmethod
    def uniform(cls, n: int, N: int) -> "InclusionPlan":
        return cls(np.full(n, N / n), N)


@dataclass(frozen=True)
class SampleIndexSet:
    indices: np.ndarray
    method: str

    def __len__(self) -> int:
        return self.indices.size

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[self.indices] = True
        return m


@dataclass(frozen=True)
class EstimateReport:
    trait: str
    ht_estimate: float
    hajek_estimate: float
    actual_total: float | None = None
    sampler: str = "pivotal"


def cap_probabilities(weights: np.ndarray, N: int) -> np.ndarray:
    """Probabilities proportional to ``weights``, summing to ``N``, each at most 1.

    Units whose share exceeds 1 are fixed at 1 and the remaining mass is
    spread over the others in proportion to their weights, repeatedly, until
    nothing exceeds 1.
    """
    w = np.asarray(weights, dtype=float)
    capped = np.zeros(w.size, dtype=bool)
    pi = N * w / w.sum()
    while np.any(pi[~capped] > 1.0):
        capped |= pi > 1.0
        free = ~capped
        pi[capped] = 1.0
        pi[free] = (N - capped.sum()) * w[free] / w[free].sum()
    free = ~capped
    if free.any():
        # Absorb rounding so the total is N as exactly as floats allow.
        pi[free] *= (N - capped.sum()) / pi[free].sum()
    return pi


def inclusion_probabilities(
    deviations: Sequence[float] | np.ndarray,
    N: int,
    n_traits: int = 1,
    floor: float | None = None,
) -> InclusionPlan:
    """Inclusion probabilities from deviations, ``pi_i ∝ 1 / dev_i``.

    Deviations below ``floor`` (default ``1e-6 * n_traits``) are raised to it,
    so a unit that is best on every trait gets a large but finite weight.
    """
    dev = np.asarray(deviations, dtype=float)
    n = dev.size
    if not 1 <= N < n:
        raise ConfigError(f"sample size must satisfy 1 <= N < n; got N={N}, n={n}")
    if np.any(~np.isfinite(dev)) or np.any(dev < 0):
        raise DataError("deviations must be finite and non-negative")
    if np.all(dev == 0):
        raise DataError("all deviations are zero; units are indistinguishable")
    if floor is None:
        floor = 1e-6 * n_traits
    weights = 1.0 / np.maximum(dev, floor)
    return InclusionPlan(cap_probabilities(weights, N), N)


def pivotal_sample(
    plan: InclusionPlan, rng: np.random.Generator, shuffle: bool = False
) -> SampleIndexSet:
    """Draw exactly ``plan.target_size`` units by the sequential pivotal method.

    Units are scanned in data order (or a seeded random order when
    ``shuffle``).  A single "current" unit carries the undecided probability
    mass; each new unit contests it:

    * combined mass below 1: one of the two is rejected and the survivor
      carries the combined mass;
    * combined mass of at least 1: one of the two is selected and the other
      carries the residual ``pi_i + pi_j - 1``.

    Each contest consumes one uniform draw, so a fixed generator state gives
    a fixed sample.
    """
    p = plan.probabilities
    n = p.size
    order = rng.permutation(n) if shuffle else np.arange(n)
    u = rng.random(n)
    selected: list[int] = []
    cur, a = -1, 0.0
    for step in range(n):
        j = int(order[step])
        pj = float(p[j])
        if pj >= 1.0 - EPS:
            selected.append(j)
            continue
        if pj <= EPS:
            continue
        if cur < 0:
            cur, a = j, pj
            continue
        s = a + pj
        if s < 1.0:
            if u[step] < pj / s:
                cur = j
            a = s
        else:
            if u[step] < (1.0 - pj) / (2.0 - s):
                selected.append(cur)
                cur = j
            else:
                selected.append(j)
            a = s - 1.0
        if a >= 1.0 - EPS:
            selected.append(cur)
            cur, a = -1, 0.0
        elif a <= EPS:
            cur, a = -1, 0.0
    if cur >= 0 and a > 0.5:
        selected.append(cur)
    if len(selected) != plan.target_size:
        raise NumericalError(
            f"pivotal scan selected {len(selected)} units, expected {plan.target_size} "
            f"(sum of probabilities {p.sum()!r})"
        )
    return SampleIndexSet(np.sort(np.array(selected, dtype=np.intp)), "pivotal")


def vq_sample(
    values: np.ndarray, N: int, rng: np.random.Generator, restarts: int = 1
) -> SampleIndexSet:
    """Pick ``N`` representative rows via a k-means codebook.

    Each codeword is snapped to its nearest data row.  When two codewords
    share a nearest row, the losers take their nearest unused row, closest
    first.
    """
    X = np.asarray(getattr(values, "values", values), dtype=float)
    n = X.shape[0]
    if not 1 <= N < n:
        raise ConfigError(f"sample size must satisfy 1 <= N < n; got N={N}, n={n}")
    codebook = kmeans(X, N, rng, restarts=restarts).centroids
    d = _sq_dists(codebook, X)
    nearest = d.argmin(axis=1)
    used = np.zeros(n, dtype=bool)
    chosen: list[int] = []
    pending: list[int] = []
    for c, r in enumerate(nearest):
        if used[r]:
            pending.append(c)
        else:
            used[r] = True
            chosen.append(int(r))
    if pending:
        log.debug("vq: %d codewords collided, filling from unused rows", len(pending))
    while pending:
        masked = np.where(used[None, :], np.inf, d[pending])
        rows = masked.argmin(axis=1)
        best = int(np.argmin(masked[np.arange(len(pending)), rows]))
        r = int(rows[best])
        used[r] = True
        chosen.append(r)
        pending.pop(best)
    return SampleIndexSet(np.sort(np.array(chosen, dtype=np.intp)), "vq")


def _sample_terms(values, plan: InclusionPlan, sample: SampleIndexSet) -> tuple[np.ndarray, np.ndarray]:
    values = np.asarray(values, dtype=float)
    idx = sample.indices
    if idx.size and (idx.min() < 0 or idx.max() >= plan.n):
        raise ConfigError("sample indices fall outside the plan's population")
    if values.size == plan.n and values.size != idx.size:
        values = values[idx]
    if values.size != idx.size:
        raise ConfigError(f"{values.size} trait values for a sample of {idx.size} units")
    return values, plan.probabilities[idx]


def ht_estimate(values, plan: InclusionPlan, sample: SampleIndexSet) -> float:
    """Horvitz-Thompson estimate of the population total.

    ``values`` may be aligned to ``sample.indices`` or cover the whole
    population.
    """
    x, pi = _sample_terms(values, plan, sample)
    return float(np.sum(x / pi))


def hajek_estimate(values, plan: InclusionPlan, sample: SampleIndexSet, n: int | None = None) -> float:
    """Hajek (ratio) estimate of the population total: ``n`` times the weighted mean."""
    x, pi = _sample_terms(values, plan, sample)
    n = plan.n if n is None else n
    return float(n * np.sum(x / pi) / np.sum(1.0 / pi))
