import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamlp.model import Embedding, NodeKind, StatsDegenerate
from streamlp.reweight import (
    compute_fewshot_stats,
    compute_prototype_stats,
    fewshot_reweighted_similarity,
    query_weighted_block,
    reweighted_target_cache_row,
    target_weighted_block,
    text_reweighted_similarity,
    unit_rows,
)


def protos(*rows):
    return [Embedding(np.array(r, dtype=float), NodeKind.PROTOTYPE, class_id=i) for i, r in enumerate(rows)]


# expected values frozen from a scalar re-derivation of the mean and the
# population (divisor-n) squared deviation
def test_prototype_stats_two_axis_vectors():
    s = compute_prototype_stats(protos((1, 0), (0, 1)))
    assert np.allclose(s.proto_mean, [0.5, 0.5])
    assert np.allclose(s.proto_var, [0.25, 0.25])


def test_prototype_stats_duplicated_vectors():
    s = compute_prototype_stats(protos((1, 0), (1, 0), (0, 1), (0, 1)))
    assert np.allclose(s.proto_var, [0.25, 0.25])


def test_prototype_stats_identical_vectors_zero_variance():
    s = compute_prototype_stats(protos((1, 0), (1, 0), (1, 0)))
    assert np.array_equal(s.proto_var, np.zeros(2))


def test_prototype_stats_degenerate():
    with pytest.raises(StatsDegenerate):
        compute_prototype_stats(protos((1, 0)))


def test_fewshot_stats_mirror_prototype_formula():
    shots = [Embedding(np.array(v, dtype=float), NodeKind.FEW_SHOT, class_id=0) for v in [(1, 0), (0, 1)]]
    s = compute_fewshot_stats(shots)
    assert np.allclose(s.fewshot_var, [0.25, 0.25])
    with pytest.raises(StatsDegenerate):
        compute_fewshot_stats(shots[:1])


def test_text_similarity_uniform_weights_is_cosine():
    q = np.array([0.6, 0.8])
    t = np.array([1.0, 0.0])
    got = text_reweighted_similarity(q, t, np.ones(2))
    assert got == pytest.approx(0.6, abs=1e-12)


def test_text_similarity_kills_masked_dimension():
    # q=(1,0), t=(0.6,0.8), var=(0,1): weighted target is (0, 0.8) -> (0, 1)
    got = text_reweighted_similarity(np.array([1.0, 0.0]), np.array([0.6, 0.8]), np.array([0.0, 1.0]))
    assert got == 0.0


def test_text_similarity_zeroed_target_returns_zero():
    got = text_reweighted_similarity(np.array([1.0, 0.0]), np.array([0.6, 0.8]), np.zeros(2))
    assert got == 0.0


def test_text_similarity_scale_invariance():
    rng = np.random.default_rng(7)
    q = unit_rows(rng.standard_normal((1, 16)))[0]
    t = unit_rows(rng.standard_normal((1, 16)))[0]
    var = rng.random(16)
    base = text_reweighted_similarity(q, t, var)
    for kappa in (1e-6, 0.5, 3.0, 1e7):
        assert text_reweighted_similarity(q, t, kappa * var) == pytest.approx(base, abs=1e-12)


def test_fewshot_similarity_uniform_variance_is_cosine():
    l = np.array([0.6, 0.8])
    u = np.array([1.0, 0.0])
    assert fewshot_reweighted_similarity(l, u, np.ones(2)) == pytest.approx(0.6, abs=1e-7)


def test_fewshot_similarity_reciprocal_crushes_high_variance_dim():
    got = fewshot_reweighted_similarity(
        np.array([1.0, 0.0]), np.array([0.6, 0.8]), np.array([1e9, 1e-9])
    )
    assert abs(got) < 1e-12


def test_fewshot_similarity_zero_variance_reduces_to_cosine():
    # uniform 1/eps weights cancel under normalization
    l = np.array([0.6, 0.8])
    u = np.array([0.8, 0.6])
    assert fewshot_reweighted_similarity(l, u, np.zeros(2)) == pytest.approx(0.6 * 0.8 * 2, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 1e6))
def test_reweighted_similarity_bounded_and_scale_invariant(seed, kappa):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 32))
    q = unit_rows(rng.standard_normal((1, d)))[0]
    t = unit_rows(rng.standard_normal((1, d)))[0]
    var = rng.random(d)
    s = text_reweighted_similarity(q, t, var)
    assert -1.0 - 1e-12 <= s <= 1.0 + 1e-12
    assert text_reweighted_similarity(q, t, kappa * var) == pytest.approx(s, abs=1e-12)


def test_block_similarity_matches_scalar_ops():
    rng = np.random.default_rng(3)
    q = unit_rows(rng.standard_normal((1, 8)))[0]
    targets = unit_rows(rng.standard_normal((5, 8)))
    var = rng.random(8)

    block = target_weighted_block(var)(q, targets)
    scalar = [text_reweighted_similarity(q, t, var) for t in targets]
    assert np.allclose(block, scalar, atol=1e-15)

    inv = 1.0 / (var + 1e-8)
    block = query_weighted_block(inv)(q, targets)
    scalar = [fewshot_reweighted_similarity(t, q, var) for t in targets]
    assert np.allclose(block, scalar, atol=1e-15)


def test_cache_row_matches_full_matrix_normalization_bitwise():
    # one appended row must equal the same row normalized inside a matrix:
    # the streaming cache and the from-scratch path rely on this
    rng = np.random.default_rng(11)
    mat = rng.standard_normal((40, 24))
    w = rng.random(24)
    full = unit_rows(mat * w)
    for i in range(mat.shape[0]):
        row = reweighted_target_cache_row(mat[i], w)
        assert np.array_equal(row, full[i])


def test_unit_rows_zero_row_stays_zero():
    out = unit_rows(np.array([[0.0, 0.0], [3.0, 4.0]]))
    assert np.array_equal(out[0], [0.0, 0.0])
    assert np.allclose(out[1], [0.6, 0.8])
