"""Seeded random streams split per pipeline stage."""

from __future__ import annotations

import numpy as np

# Order is part of the reproducibility contract: appending is fine, reordering is not.
STAGES = ("sampling", "kmeans", "vq", "synth", "shuffle")


def stage_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for each stage, derived from one seed.

    Stages draw from disjoint substreams, so turning one stage on or off
    never changes the numbers another stage sees.
    """
    children = np.random.SeedSequence(seed).spawn(len(STAGES))
    return {name: np.random.default_rng(child) for name, child in zip(STAGES, children)}


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
