import numpy as np
import pytest

from streamlp.graph import (
    BoundedRowGraph,
    EdgeWeightConfig,
    NodeBlock,
    knn_edges,
    rebuild_static,
    static_rows,
)
from streamlp.model import ContextStats, HyperParams
from streamlp.oracle import exhaustive_knn
from streamlp.reweight import compute_prototype_stats, target_weighted_block

from conftest import random_unit

PLAIN = EdgeWeightConfig(reweight_tests=False, reweight_protos=False, reweight_fewshot=False)


def make_stats(protos):
    return compute_prototype_stats(np.asarray(protos, dtype=float))


def dummy_stats(d):
    return ContextStats(proto_mean=np.zeros(d), proto_var=np.ones(d))


def test_knn_edges_top3_matches_full_sort(rng):
    protos = random_unit(rng, 5, 12)
    stats = make_stats(protos)
    block = NodeBlock(np.arange(5, dtype=np.int64), protos)
    sim = target_weighted_block(stats.proto_var)
    for _ in range(50):
        q = random_unit(rng, 1, 12)[0]
        ids, w = knn_edges(q, block, 3, sim)
        oracle_ids, oracle_w = exhaustive_knn(q, block, 3, sim)
        assert np.array_equal(ids, oracle_ids)
        assert np.array_equal(w, oracle_w)


def test_knn_edges_fewer_candidates_than_k(rng):
    vecs = random_unit(rng, 2, 6)
    block = NodeBlock(np.arange(2, dtype=np.int64), vecs)
    ids, w = knn_edges(random_unit(rng, 1, 6)[0], block, 8, target_weighted_block(None))
    assert ids.shape == (2,) and w.shape == (2,)


def test_knn_edges_clamps_negative_similarity():
    block = NodeBlock(np.arange(2, dtype=np.int64), np.array([[1.0, 0.0], [-1.0, 0.0]]))
    ids, w = knn_edges(np.array([1.0, 0.0]), block, 2, target_weighted_block(None))
    assert np.array_equal(ids, [0, 1])
    assert np.array_equal(w, [1.0, 0.0])  # -1 similarity stored as 0


def test_knn_edges_empty_block():
    block = NodeBlock(np.empty(0, dtype=np.int64), np.empty((0, 4)))
    ids, w = knn_edges(np.ones(4) / 2.0, block, 3, target_weighted_block(None))
    assert ids.size == 0 and w.size == 0


def expand_stream(rng, n, d=16, C=4, hyper=None, config=None):
    protos = random_unit(rng, C, d)
    stats = make_stats(protos)
    g = BoundedRowGraph(protos, None, stats, hyper or HyperParams(), config or EdgeWeightConfig())
    tests = random_unit(rng, n, d)
    for i in range(n):
        g.expand(tests[i])
    return g, protos, stats, tests


def test_capacity_bounds_hold_after_any_stream(rng):
    hyper = HyperParams(k_proto=2, k_test=3, k_fewshot=2)
    g, *_ = expand_stream(rng, 60, hyper=hyper)
    for row in range(g.n_test):
        edges = g.row_edges(row)
        assert len(edges["proto"][0]) <= 2
        assert len(edges["test"][0]) <= 3
        assert len(edges["fewshot"][0]) == 0
        # no duplicate targets, no self edges
        t = edges["test"][0]
        assert len(set(t)) == len(t)
        assert g.test_base + row not in t


def test_first_test_node_has_no_test_edges(rng):
    g, *_ = expand_stream(rng, 1)
    edges = g.row_edges(0)
    assert edges["test"][0].size == 0
    assert edges["proto"][0].size == 3


def test_expand_dimension_mismatch(rng):
    g, *_ = expand_stream(rng, 1, d=8)
    with pytest.raises(ValueError):
        g.expand(np.ones(9) / 3.0)


def test_replacement_never_decreases_row_minimum(rng):
    hyper = HyperParams(k_test=4)
    protos = random_unit(rng, 3, 10)
    stats = make_stats(protos)
    g = BoundedRowGraph(protos, None, stats, hyper)
    tests = random_unit(rng, 80, 10)
    mins: dict[int, float] = {}
    for i in range(80):
        g.expand(tests[i])
        for row in range(g.n_test - 1):
            t, w = g.row_edges(row)["test"]
            if len(w) == hyper.k_test:
                lo = w.min()
                if row in mins:
                    assert lo >= mins[row] - 1e-15
                mins[row] = lo


def test_new_row_matches_static_rebuild_exactly(rng):
    hyper = HyperParams()
    protos = random_unit(rng, 6, 12)
    stats = make_stats(protos)
    g = BoundedRowGraph(protos, None, stats, hyper)
    tests = random_unit(rng, 120, 12)
    for i in range(120):
        g.expand(tests[i])
        ref = static_rows(protos, None, tests[: i + 1], stats, hyper)
        got = g.row_edges(i)
        want = ref.row_edges(i)
        for name in ("proto", "test", "fewshot"):
            assert np.array_equal(got[name][0], want[name][0]), f"{name} targets at arrival {i}"
            assert np.array_equal(got[name][1], want[name][1]), f"{name} weights at arrival {i}"


def test_finalize_two_node_normalizes_single_edge_to_one(rng):
    # proto (1,0), one test at angle: single directed edge of weight s
    protos = np.array([[1.0, 0.0]])
    g = BoundedRowGraph(protos, None, dummy_stats(2), HyperParams(k_proto=1, k_test=8), PLAIN)
    g.expand(np.array([0.6, 0.8]))
    wn = g.finalize(gamma=10.0).matrix.toarray()
    assert np.allclose(wn, [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)


def test_finalize_matches_dense_reference(rng):
    # independent dense recomputation of symmetrize -> power -> normalize
    hyper = HyperParams(k_proto=2, k_test=3, gamma=4.0)
    g, protos, stats, tests = expand_stream(rng, 25, d=8, C=5, hyper=hyper)
    wn = g.finalize().matrix.toarray()

    n = g.n_nodes
    dense = np.zeros((n, n))
    for row in range(g.n_test):
        for name in ("proto", "test", "fewshot"):
            t, w = g.row_edges(row)[name]
            for tj, wj in zip(t, w):
                dense[g.test_base + row, tj] = wj
    dense = dense + dense.T
    dense = dense**hyper.gamma
    deg = dense.sum(axis=1)
    dinv = np.zeros(n)
    dinv[deg > 0] = deg[deg > 0] ** -0.5
    dense = dinv[:, None] * dense * dinv[None, :]
    assert np.allclose(wn, dense, atol=1e-14)


def test_finalize_invariants_on_random_graphs(rng):
    for trial in range(10):
        n = int(rng.integers(5, 60))
        g, *_ = expand_stream(rng, n, d=8, C=4)
        wn = g.finalize().matrix.toarray()
        assert np.max(np.abs(wn - wn.T)) <= 1e-12
        assert np.all(wn >= 0)
        assert np.all(np.isfinite(wn))
        eig = np.max(np.abs(np.linalg.eigvalsh((wn + wn.T) / 2)))
        assert eig <= 1 + 1e-9


def test_finalize_isolated_node_is_zero_row():
    # second test is orthogonal to everything and k is starved by clamping:
    # all its similarities are negative, so every stored weight clamps to 0
    protos = np.array([[1.0, 0.0, 0.0]])
    g = BoundedRowGraph(protos, None, dummy_stats(3), HyperParams(k_proto=1, k_test=2), PLAIN)
    g.expand(np.array([1.0, 0.0, 0.0]))
    g.expand(np.array([-1.0, 0.0, 0.0]))
    wn = g.finalize().matrix.toarray()
    iso = g.test_base + 1
    assert np.array_equal(wn[iso], np.zeros(3))
    assert np.array_equal(wn[:, iso], np.zeros(3))


def test_rebuild_static_single_test_node(rng):
    protos = random_unit(rng, 7, 9)
    stats = make_stats(protos)
    test = random_unit(rng, 1, 9)
    g = static_rows(protos, None, test, stats, HyperParams())
    t, w = g.row_edges(0)["proto"]
    assert t.shape == (3,)  # exactly min(k_proto, C) edges
    assert g.row_edges(0)["test"][0].size == 0
    # the normalized matrix keeps the positive-weight ones, mirrored
    wn = g.finalize()
    assert wn.matrix.nnz == 2 * int(np.sum(w > 0))


def test_per_arrival_expand_time_is_affine_in_node_count(rng):
    # O(d * n) contract: per-arrival time over a long stream fits a + b*n.
    # min-of-repeats plus median bins isolate the deterministic cost from
    # scheduler noise
    from streamlp.bench import _measure_dynamic_min
    from streamlp.reweight import unit_rows

    protos = unit_rows(rng.standard_normal((8, 64)))
    tests = unit_rows(rng.standard_normal((2500, 64)))
    times = _measure_dynamic_min(tests, protos, HyperParams(), repeats=3)
    bins = np.median(times.reshape(-1, 50), axis=1)
    ns = np.arange(2500).reshape(-1, 50).mean(axis=1)
    coeffs = np.polyfit(ns, bins, 1)
    fit = np.polyval(coeffs, ns)
    r2 = 1.0 - float(np.sum((bins - fit) ** 2)) / float(np.sum((bins - bins.mean()) ** 2))
    assert coeffs[0] > 0  # genuinely growing with n
    assert r2 >= 0.95, f"R^2 {r2:.3f}"


def test_fewshot_block_edges(rng):
    protos = random_unit(rng, 4, 10)
    few = random_unit(rng, 6, 10)
    stats = compute_prototype_stats(protos)
    from streamlp.reweight import compute_fewshot_stats, merge_stats

    stats = merge_stats(stats, compute_fewshot_stats(few))
    g = BoundedRowGraph(protos, few, stats, HyperParams(k_fewshot=2))
    g.expand(random_unit(rng, 1, 10)[0])
    t, w = g.row_edges(0)["fewshot"]
    assert t.shape == (2,)
    assert all(4 <= tj < 10 for tj in t)  # few-shot ids sit after the 4 prototypes
