import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gnorm.core import INF, DomainError, ExponentPair, ResourceError
from gnorm.pqnorm import norm_1_to_q
from gnorm.structure import (
    ProfileGraph,
    band_cut,
    band_labels,
    band_size,
    bipartite_distance,
    block_diag_compose,
    block_diag_norm_check,
    check_subset_count_bound,
    decode_labels,
    degrees,
    enumerate_r_connected_subsets,
    greedy_band_decomposition,
)

import oracles


def tridiagonal(m):
    return np.eye(m) + np.eye(m, k=1) + np.eye(m, k=-1)


def test_degrees_examples():
    assert degrees(np.eye(4)) == (1, 1, 1)
    assert degrees(np.ones((3, 5))) == (5, 3, 5)
    assert degrees([[1, 0], [1, 1]]) == (2, 2, 2)


def test_distance_examples():
    A = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert bipartite_distance(A, ("row", 0), ("col", 0)) == 1
    assert bipartite_distance(A, ("row", 0), ("row", 1)) == INF
    assert bipartite_distance(tridiagonal(4), ("row", 0), ("row", 1)) == 2
    with pytest.raises(DomainError):
        bipartite_distance(A, ("row", 5), ("col", 0))
    with pytest.raises(DomainError):
        bipartite_distance(A, "r0", ("col", 0))


@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
              elements=st.sampled_from([0.0, 0.0, 1.0, -2.0])))
def test_distance_matches_floyd_warshall(a):
    g = ProfileGraph(a)
    D = oracles.bipartite_distances(a)
    m, n = a.shape
    verts = [("row", i) for i in range(m)] + [("col", j) for j in range(n)]
    for u, vu in enumerate(verts):
        for v, vv in enumerate(verts):
            assert g.distance(vu, vv) == D[u][v]


def test_enumeration_examples():
    assert enumerate_r_connected_subsets(np.eye(5), 2, 2) == []
    for m in (3, 7, 12):
        bidiagonal = np.eye(m) + np.eye(m, k=1)
        pairs = enumerate_r_connected_subsets(bidiagonal, 2, 2)
        assert pairs == [frozenset({i, i + 1}) for i in range(m - 1)]
        # full tridiagonal: rows i and i+2 also share column i+1
        pairs = enumerate_r_connected_subsets(tridiagonal(m), 2, 2)
        assert len(pairs) == 2 * m - 3
        assert pairs == oracles.r_connected_subsets_bruteforce(tridiagonal(m), 2, 2)
    A = np.random.default_rng(0).random((6, 4))
    assert enumerate_r_connected_subsets(A, 2, 1) == [frozenset({i}) for i in range(6)]


def test_enumeration_budget():
    with pytest.raises(ResourceError):
        enumerate_r_connected_subsets(np.ones((12, 3)), 2, 6, budget=100)


@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 6)),
              elements=st.sampled_from([0.0, 0.0, 0.0, 1.0])),
       st.integers(0, 4), st.integers(1, 4))
def test_enumeration_matches_bruteforce(a, r, k):
    assert enumerate_r_connected_subsets(a, r, k) == oracles.r_connected_subsets_bruteforce(a, r, k)


def test_count_bound_examples():
    rep = check_subset_count_bound(np.eye(6), 2, 2)
    assert rep["count"] == 0 and rep["bound"] == 6 * 16 and rep["holds"]
    A = (np.random.default_rng(1).random((8, 8)) < 0.3).astype(float)
    rep = check_subset_count_bound(A, 3, 1)
    assert rep["count"] == 8 and rep["bound"] == 8 * 4 * rep["d_A"] ** 3


def test_block_diag_compose():
    C = np.asarray(block_diag_compose([[[1, 2]], [[3], [4]]]))
    np.testing.assert_array_equal(C, [[1, 2, 0], [0, 0, 3], [0, 0, 4]])


def test_block_diag_one_by_one():
    for pq in (ExponentPair(1, 2), ExponentPair(1.5, 3), ExponentPair(2, INF)):
        rep = block_diag_norm_check([[[2.0]], [[3.0]]], pq)
        assert rep["overlap"]
        assert rep["composed"][0] <= 3.0 + 1e-12 and rep["composed"][1] >= 3.0 - 1e-12


def test_block_diag_single_block():
    A = np.random.default_rng(3).standard_normal((3, 3))
    rep = block_diag_norm_check([A], ExponentPair(1.5, 3))
    assert rep["composed"] == rep["max_block"]


def test_block_diag_exact_p_one():
    rng = np.random.default_rng(4)
    blocks = [rng.standard_normal((2, 2)), rng.standard_normal((2, 2))]
    rep = block_diag_norm_check(blocks, (1, 3))
    assert rep["exact"] and rep["equal"]
    direct = max(oracles.max_column_norm(b, 3) for b in blocks)
    assert norm_1_to_q(block_diag_compose(blocks), 3).value == pytest.approx(direct, abs=1e-12)


def test_block_diag_requires_p_le_q():
    with pytest.raises(DomainError):
        block_diag_norm_check([np.eye(2)], (3, 2))


def test_band_constants():
    assert [band_size(k) for k in range(4)] == [1, 4, 16, 256]
    assert [band_cut(k) for k in range(1, 4)] == [8, 80, 4352]


def test_band_labels_partition_and_shape():
    for size in (1, 4, 16, 256):
        lab = band_labels(size)
        assert set(np.unique(lab)) <= {1, 2, 3}
        assert lab[0, 0] == 1
    lab = band_labels(16)
    assert np.all(lab[:8, :8] == 1)
    assert np.all(lab[4:16, 4:16][lab[4:16, 4:16] != 1] == 2)
    assert lab[0, 15] == 3


def test_trivial_decompositions():
    d = greedy_band_decomposition([[7.0]], ExponentPair(2, 2))
    assert d.size == 1 and d.labels.tolist() == [[1]] and d.verify()["ok"]
    d = greedy_band_decomposition(np.zeros((5, 3)), ExponentPair(2, 2))
    assert d.verify()["ok"] and d.size == 16


def test_powerlaw_decomposition():
    i = np.arange(1, 21)[:, None]
    A = (i + i.T) ** -1.0
    for pq in (ExponentPair(2, 2), ExponentPair(1.5, 3), ExponentPair(1, INF)):
        d = greedy_band_decomposition(A, pq)
        rep = d.verify()
        assert d.size == 256 and rep["ok"] and rep["decay_checked_entries"] > 0


def test_decomposition_json_round_trip():
    A = np.random.default_rng(5).standard_normal((10, 7))
    d = greedy_band_decomposition(A, ExponentPair(1.5, 3))
    obj = json.loads(d.to_json())
    assert sorted(obj["row_perm"]) == list(range(16))
    np.testing.assert_array_equal(decode_labels(obj["masks_rle"], obj["size"]), d.labels)
    assert [c["N_k"] for c in obj["cut_sequence"]] == [1, 4, 16]


def test_decomposition_cap():
    with pytest.raises(ResourceError):
        greedy_band_decomposition(np.ones((257, 2)), ExponentPair(2, 2))


def test_greedy_ties_lowest_index():
    d = greedy_band_decomposition(np.ones((3, 3)), ExponentPair(2, 2))
    assert d.row_perm == [0, 1, 2, 3] and d.col_perm == [0, 1, 2, 3]


@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 20)),
              elements=st.one_of(st.just(0.0), st.floats(-10, 10))),
       st.sampled_from([ExponentPair(2, 2), ExponentPair(1.5, 3), ExponentPair(4 / 3, 4)]))
def test_decomposition_invariants(a, pq):
    rep = greedy_band_decomposition(a, pq).verify()
    assert rep["ok"], rep
