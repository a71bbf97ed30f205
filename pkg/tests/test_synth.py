import io

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from phenoclust.errors import ConfigError
from phenoclust.rng import stage_streams
from phenoclust.synth import make_blobs


def test_shapes_and_balance():
    b = make_blobs(103, 4, 5, rng=0)
    assert b.values.shape == (103, 4)
    assert sorted(np.bincount(b.labels).tolist()) == [20, 20, 21, 21, 21]


def test_centres_separated():
    for seed in range(10):
        b = make_blobs(50, 3, 5, separation=6.0, sigma=0.5, rng=seed)
        assert pdist(b.centers).min() >= 3.0


def test_weights():
    b = make_blobs(100, 2, 2, weights=[3, 1], rng=0)
    assert np.bincount(b.labels).tolist() == [75, 25]


def test_deterministic_and_csv():
    a, b = make_blobs(20, 2, 2, rng=4), make_blobs(20, 2, 2, rng=4)
    assert np.array_equal(a.values, b.values)
    buf = io.StringIO()
    a.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "genotype,t1,t2" and len(lines) == 21
    buf = io.StringIO()
    a.labels_csv(buf)
    assert buf.getvalue().splitlines()[0] == "unit_id,cluster"


def test_heavy_tails_heavier():
    g = make_blobs(4000, 1, 1, rng=0, offset=0).values
    t = make_blobs(4000, 1, 1, rng=0, tail="student_t", df=2.0, offset=0).values
    assert np.abs(t).max() > 3 * np.abs(g).max()


def test_bad_arguments():
    with pytest.raises(ConfigError):
        make_blobs(3, 2, 5)
    with pytest.raises(ConfigError):
        make_blobs(10, 2, 2, tail="cauchy")
    with pytest.raises(ConfigError):
        make_blobs(10, 1, 4, separation=6.0, box=1.0)


def test_stage_streams_independent():
    a = stage_streams(5)
    b = stage_streams(5)
    assert a["sampling"].random() == b["sampling"].random()
    c = stage_streams(5)
    c["kmeans"].random(1000)  # drawing from one stage leaves the others untouched
    assert c["sampling"].random() == stage_streams(5)["sampling"].random()
    assert stage_streams(5)["sampling"].random() != stage_streams(5)["kmeans"].random()
