"""Reverse mapping: attach unsampled units to the clusters found on the sample.

An unsampled unit joins the cluster with the highest average similarity,
the mean of ``exp(-d)`` between the unit and every member of that cluster.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .assignment import REVERSE_MAPPED, ClusterAssignment
from .errors import DataError
from .simgraph import cross_distances

log = logging.getLogger(__name__)

BATCH = 512


@dataclass(frozen=True)
class ReverseMapReport:
    """Per reverse-mapped unit: its table position, chosen cluster and the
    average similarity to every cluster (NaN for clusters with no members)."""

    positions: np.ndarray
    chosen: np.ndarray
    scores: np.ndarray


def average_similarity(point, members, measure: str) -> float:
    members = np.atleast_2d(np.asarray(members, dtype=float))
    if members.shape[0] == 0 or members.size == 0:
        raise DataError("average similarity against an empty cluster")
    d = cross_distances(np.asarray(point, dtype=float)[None, :], members, measure)[0]
    return float(np.exp(-d).mean())


def reverse_map(
    table, sampled: ClusterAssignment, measure: str
) -> tuple[ClusterAssignment, ReverseMapReport]:
    """Label every unit of ``table`` not already in ``sampled``.

    Ties go to the lowest cluster index.  Empty clusters are never chosen.
    """
    X = np.asarray(getattr(table, "values", table), dtype=float)
    unit_ids = getattr(table, "unit_ids", sampled.unit_ids)
    n = X.shape[0]
    labelled = np.zeros(n, dtype=bool)
    labelled[sampled.positions] = True
    todo = np.flatnonzero(~labelled)
    k = sampled.k
    counts = sampled.sizes
    empty = counts == 0
    if empty.all():
        raise DataError("cannot reverse-map: every sampled cluster is empty")
    if empty.any():
        log.warning("reverse mapping skips empty clusters %s", np.flatnonzero(empty).tolist())

    members = X[sampled.positions]
    onehot = np.zeros((sampled.size, k))
    onehot[np.arange(sampled.size), sampled.labels] = 1.0
    scores = np.empty((todo.size, k))
    for start in range(0, todo.size, BATCH):
        block = todo[start : start + BATCH]
        sim = np.exp(-cross_distances(X[block], members, measure))
        with np.errstate(invalid="ignore", divide="ignore"):
            scores[start : start + BATCH] = (sim @ onehot) / counts
    scores[:, empty] = np.nan
    chosen = np.where(empty, -np.inf, scores).argmax(axis=1) if todo.size else np.zeros(0, dtype=np.intp)

    positions = np.concatenate([sampled.positions, todo])
    labels = np.concatenate([sampled.labels, chosen])
    provenance = sampled.provenance + (REVERSE_MAPPED,) * todo.size
    order = np.argsort(positions, kind="stable")
    full = ClusterAssignment(
        positions[order], labels[order], k, tuple(provenance[i] for i in order), unit_ids
    )
    return full, ReverseMapReport(todo, chosen.astype(np.intp), scores)


def assign_remaining(table, sampled: ClusterAssignment, measure: str) -> ClusterAssignment:
    return reverse_map(table, sampled, measure)[0]
