import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import cut_tree, linkage as scipy_linkage
from scipy.spatial.distance import squareform

from oracles import brute_agglomerate, partition_of, ward_agglomerate
from phenoclust.assignment import same_partition
from phenoclust.errors import ConfigError
from phenoclust.hclust import LINKAGES, hierarchical_cluster, merge_history
from phenoclust.simgraph import pairwise_distances


def test_two_triples_average():
    X = np.array([[0, 0], [0.1, 0], [0, 0.1], [5, 5], [5.1, 5], [5, 5.1]])
    a = hierarchical_cluster(X, "euclidean", "average", k=2)
    assert same_partition(a.labels, [0, 0, 0, 1, 1, 1])


def test_k_extremes():
    X = np.random.default_rng(0).random((7, 2))
    assert sorted(hierarchical_cluster(X, k=7).labels.tolist()) == list(range(7))
    assert hierarchical_cluster(X, k=1).labels.tolist() == [0] * 7


@pytest.mark.parametrize("link", ["single", "complete", "average"])
@pytest.mark.parametrize("seed", range(8))
def test_exhaustive_merge_oracle(link, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 9))
    X = rng.random((n, 2))
    D = pairwise_distances(X, "euclidean").tolist()
    for k in range(1, n + 1):
        got = hierarchical_cluster(X, "euclidean", link, k=k).labels
        assert partition_of(got) == brute_agglomerate(D, k, link)


@pytest.mark.parametrize("seed", range(6))
def test_ward_matches_sse_oracle(seed):
    X = np.random.default_rng(seed).random((8, 3))
    for k in range(1, 9):
        got = hierarchical_cluster(X, "squared_euclidean", "ward", k=k).labels
        assert partition_of(got) == ward_agglomerate(X, k)


@pytest.mark.parametrize("link", LINKAGES)
@pytest.mark.parametrize("engine", ["naive", "nn_chain"])
def test_matches_scipy_linkage(link, engine):
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(10, 65))
        X = rng.random((n, 3))
        D = pairwise_distances(X, "euclidean")
        ours = merge_history(X, "euclidean", link, engine)
        ref = scipy_linkage(squareform(D, checks=False), method=link)
        np.testing.assert_allclose(ours.merges[:, 2], ref[:, 2], rtol=1e-9, atol=1e-12)
        np.testing.assert_array_equal(ours.merges[:, 3], ref[:, 3])
        for k in (2, 3, 5, n // 2):
            assert same_partition(ours.cut(k), cut_tree(ref, n_clusters=k)[:, 0])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.sampled_from(LINKAGES), st.integers(0, 2**32 - 1))
def test_monotone_nested_and_engines_agree(n, link, seed):
    X = np.random.default_rng(seed).random((n, 2))
    naive = merge_history(X, "euclidean", link, "naive")
    chain = merge_history(X, "euclidean", link, "nn_chain")
    h = naive.merges[:, 2]
    assert np.all(np.diff(h) >= -1e-12)
    np.testing.assert_allclose(np.sort(chain.merges[:, 2]), h, rtol=1e-9, atol=1e-12)
    prev = naive.cut(n)
    for k in range(n - 1, 0, -1):
        cur = naive.cut(k)
        # going from k+1 to k clusters merges exactly two blocks
        pairs = {(int(a), int(b)) for a, b in zip(prev, cur)}
        assert len(pairs) == k + 1
        assert len({b for _, b in pairs}) == k
        assert same_partition(cur, chain.cut(k))
        prev = cur


def test_stop_early_history():
    X = np.random.default_rng(1).random((10, 2))
    h = merge_history(X, "euclidean", "average", stop_at=4)
    assert len(h.merges) == 6
    assert same_partition(h.cut(4), merge_history(X, "euclidean", "average").cut(4))
    with pytest.raises(ConfigError):
        h.cut(3)


def test_ward_needs_euclidean():
    with pytest.raises(ConfigError):
        hierarchical_cluster(np.random.default_rng(0).random((5, 2)), "city_block", "ward", k=2)


def test_unknown_engine_and_linkage():
    X = np.random.default_rng(0).random((5, 2))
    with pytest.raises(ConfigError):
        merge_history(X, engine="fast")
    with pytest.raises(ConfigError):
        merge_history(X, linkage="centroid")


def test_merges_csv():
    X = np.random.default_rng(0).random((4, 2))
    buf = io.StringIO()
    merge_history(X).to_csv(buf, header_comment="run=x")
    lines = buf.getvalue().splitlines()
    assert lines[:2] == ["# run=x", "step,cluster_a,cluster_b,height"]
    assert len(lines) == 5
    assert lines[-1].split(",")[1:3] == sorted(lines[-1].split(",")[1:3], key=int)


def test_precomputed_distances_used():
    X = np.random.default_rng(0).random((9, 2))
    D = pairwise_distances(X, "city_block")
    a = hierarchical_cluster(X, "city_block", k=3, distances=D)
    b = hierarchical_cluster(X, "city_block", k=3)
    assert np.array_equal(a.labels, b.labels)
