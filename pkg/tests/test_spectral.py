import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from phenoclust.assignment import same_partition
from phenoclust.errors import ConfigError, DataError
from phenoclust.simgraph import similarity_matrix
from phenoclust.spectral import (
    cluster_embedding,
    eigengap_estimate_k,
    embed,
    laplacian,
    smallest_eigenpairs,
    spectral_cluster,
)
from phenoclust.synth import make_blobs
from phenoclust.validate import silhouette


def random_W(rng, n):
    A = rng.random((n, n))
    W = 0.5 * (A + A.T)
    np.fill_diagonal(W, 1.0)
    return W


def block_W(rng, sizes, eps=0.0):
    n = sum(sizes)
    W = np.full((n, n), eps)
    start = 0
    for s in sizes:
        B = rng.uniform(0.2, 1.0, (s, s))
        W[start : start + s, start : start + s] = 0.5 * (B + B.T)
        start += s
    np.fill_diagonal(W, 1.0)
    return W


def test_two_node_type1_closed_form():
    q = 0.3
    W = np.array([[1.0, q], [q, 1.0]])
    L = laplacian(W, "type1")
    np.testing.assert_allclose(L.matrix, [[q, -q], [-q, q]], atol=1e-15)
    np.testing.assert_allclose(smallest_eigenpairs(L, 2).eigenvalues, [0.0, 2 * q], atol=1e-12)


@pytest.mark.parametrize("kind", ["type1", "type3"])
def test_row_sums_zero(kind):
    L = laplacian(random_W(np.random.default_rng(0), 12), kind)
    np.testing.assert_allclose(L.matrix.sum(axis=1), 0.0, atol=1e-9)


def test_type2_symmetric():
    L = laplacian(random_W(np.random.default_rng(1), 10), "type2")
    assert np.array_equal(L.matrix, L.matrix.T)


def test_type1_constant_nullvector():
    emb = smallest_eigenpairs(laplacian(random_W(np.random.default_rng(2), 15), "type1"), 1)
    assert abs(emb.eigenvalues[0]) < 1e-9
    u = emb.vectors[:, 0]
    np.testing.assert_allclose(u, np.full(15, 1 / np.sqrt(15)), atol=1e-9)


def test_type2_type3_agree_with_dense_nonsymmetric_solver():
    W = random_W(np.random.default_rng(3), 4)
    t2 = embed(W, 4, "type2").eigenvalues
    t3 = embed(W, 4, "type3").eigenvalues
    # independent route: eigenvalues of the non-symmetric I - D^-1 W
    L3 = np.eye(4) - W / W.sum(axis=1)[:, None]
    direct = np.sort(np.linalg.eigvals(L3).real)
    np.testing.assert_allclose(t2, t3, atol=1e-9)
    np.testing.assert_allclose(t3, direct, atol=1e-9)


@pytest.mark.parametrize("kind", ["type1", "type2", "type3"])
def test_unit_norm_and_residual(kind):
    W = random_W(np.random.default_rng(4), 30)
    L = laplacian(W, kind)
    emb = smallest_eigenpairs(L, 6)
    np.testing.assert_allclose(np.linalg.norm(emb.vectors, axis=0), 1.0, atol=1e-12)
    r = np.linalg.norm(L.matrix @ emb.vectors - emb.vectors * emb.eigenvalues, axis=0)
    assert np.all(r <= 1e-8)
    assert np.all(np.diff(emb.eigenvalues) >= 0)


@pytest.mark.parametrize("blocks", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("kind", ["type1", "type3"])
def test_zero_multiplicity_equals_components(blocks, kind):
    rng = np.random.default_rng(blocks)
    W = block_W(rng, [int(s) for s in rng.integers(3, 9, size=blocks)])
    vals = embed(W, min(W.shape[0], blocks + 2), kind).eigenvalues
    assert int(np.sum(vals < 1e-9)) == blocks


def test_block_diagonal_partition_recovered():
    rng = np.random.default_rng(8)
    sizes = [5, 8, 6]
    W = block_W(rng, sizes)
    truth = np.repeat(np.arange(3), sizes)
    a = spectral_cluster(W, 3, "type3", np.random.default_rng(0))
    assert same_partition(a.labels, truth)


def test_k_one_single_cluster():
    a = spectral_cluster(random_W(np.random.default_rng(0), 6), 1)
    assert a.labels.tolist() == [0] * 6


def test_k_out_of_range():
    with pytest.raises(ConfigError):
        spectral_cluster(random_W(np.random.default_rng(0), 4), 5)
    with pytest.raises(ConfigError):
        smallest_eigenpairs(laplacian(random_W(np.random.default_rng(0), 4)), 0)


def test_zero_degree_rejected():
    with pytest.raises(DataError):
        laplacian(np.zeros((3, 3)))


def test_unknown_kind():
    with pytest.raises(ConfigError):
        laplacian(np.eye(2), "type4")


def test_eigengap_examples():
    assert eigengap_estimate_k([0, 0, 0, 0.9, 1.0, 1.1], 6) == 3
    assert eigengap_estimate_k([0.5] * 5, 5) == 1
    assert eigengap_estimate_k([0, 1, 2, 3], 4) == 1  # equal gaps, smallest index


def test_eigengap_errors():
    with pytest.raises(DataError):
        eigengap_estimate_k([0.0], 2)
    with pytest.raises(ConfigError):
        eigengap_estimate_k([0.0, 1.0], 3)


def test_eigengap_on_disconnected_blobs():
    rng = np.random.default_rng(0)
    W = block_W(rng, [10, 12, 9])
    vals = embed(W, 10, "type3").eigenvalues
    assert eigengap_estimate_k(vals, 10) == 3 == int(np.sum(vals < 1e-6))


def test_three_blob_embedding_silhouette():
    b = make_blobs(150, 4, 3, separation=8.0, rng=1)
    W = similarity_matrix(b.values, "euclidean")
    emb = embed(W, 3, "type3")
    labels = cluster_embedding(emb, 3, np.random.default_rng(0))
    assert same_partition(labels, b.labels)
    assert silhouette(np.asarray(emb.vectors), labels, "euclidean").overall > 0.8


def test_identity_like_type1_eigenvalues_near_degrees():
    W = np.eye(5) + 1e-9 * (1 - np.eye(5))
    vals = embed(W, 5, "type1").eigenvalues
    # degrees are 1 + 4e-9 and the Laplacian is almost zero
    assert np.all(np.abs(vals) < 1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 25), st.integers(0, 2**32 - 1))
def test_type1_psd_and_type23_spectra(n, seed):
    W = random_W(np.random.default_rng(seed), n)
    t1 = scipy.linalg.eigvalsh(laplacian(W, "type1").matrix)
    assert t1.min() >= -1e-9
    np.testing.assert_allclose(embed(W, n, "type2").eigenvalues, embed(W, n, "type3").eigenvalues, atol=1e-8)


def test_label_permutation_does_not_change_metrics():
    b = make_blobs(90, 3, 3, rng=2)
    W = similarity_matrix(b.values, "euclidean")
    a = spectral_cluster(W, 3, rng=np.random.default_rng(0))
    relabeled = (a.labels + 1) % 3
    s1 = silhouette(b.values, a.labels)
    s2 = silhouette(b.values, relabeled)
    assert s1.overall == pytest.approx(s2.overall, abs=1e-12)
    assert sorted(s1.sizes) == sorted(s2.sizes)
