import io

import numpy as np
import pytest

from phenoclust.assignment import REVERSE_MAPPED, SAMPLED, ClusterAssignment, canonical_labels, same_partition


def test_invariants():
    with pytest.raises(ValueError):
        ClusterAssignment(np.array([0, 0]), np.array([0, 1]), 2, (SAMPLED, SAMPLED))
    with pytest.raises(ValueError):
        ClusterAssignment(np.array([0, 1]), np.array([0, 2]), 2, (SAMPLED, SAMPLED))
    with pytest.raises(ValueError):
        ClusterAssignment(np.array([0, 1]), np.array([0, 1]), 2, (SAMPLED,))


def test_sizes_and_empty_clusters():
    a = ClusterAssignment(np.arange(4), np.array([0, 0, 2, 2]), 3, (SAMPLED,) * 4)
    assert a.sizes.tolist() == [2, 0, 2]
    assert a.empty_clusters == [1]


def test_csv_sorted_by_position():
    a = ClusterAssignment(
        np.array([2, 0, 1]), np.array([1, 0, 0]), 2, (REVERSE_MAPPED, SAMPLED, SAMPLED), ("a", "b", "c")
    )
    buf = io.StringIO()
    a.to_csv(buf, header_comment="run=1")
    assert buf.getvalue() == "# run=1\nunit_id,cluster,provenance\na,0,sampled\nb,0,sampled\nc,1,reverse_mapped\n"


def test_canonical_and_same_partition():
    lab, k = canonical_labels(np.array([5, 5, 2, 9, 2]))
    assert lab.tolist() == [0, 0, 1, 2, 1] and k == 3
    assert same_partition([1, 1, 0], [7, 7, 3])
    assert not same_partition([1, 1, 0], [1, 0, 0])
    assert not same_partition([0, 1], [0, 1, 1])
