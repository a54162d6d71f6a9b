"""Context statistics and context-aware re-weighted similarities.

Feature dimensions with high variance across the class prototypes are the
discriminative ones, so they get amplified when scoring edges; dimensions
with high variance across the pooled few-shot samples reflect intra-class
spread and get suppressed via the reciprocal. In both cases the re-weighted
target is re-normalized to unit length, which keeps every similarity
cosine-like (bounded by [-1, 1]) and makes the weighting invariant to
positive rescaling of the weight vector.

All weighting is applied to the *target* side of the pair; symmetry is
restored later when the graph adds its transpose.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import backend
from .model import ContextStats, Embedding, NodeKind, StatsDegenerate, as_matrix

# guards exact-zero few-shot variances before taking the reciprocal
RECIPROCAL_EPS = 1e-8

# (query d-vector, targets (n, d) matrix) -> similarities (n,)
BlockSimilarity = Callable[[np.ndarray, np.ndarray], np.ndarray]


def unit_rows(mat: np.ndarray) -> np.ndarray:
    """L2-normalize each row; rows of zero norm are returned as zeros.

    Single normalization routine for the whole package: per-row reductions
    are independent of the number of rows, so normalizing one appended row
    matches normalizing it inside a larger matrix bit for bit.
    """
    mat = np.ascontiguousarray(mat, dtype=np.float64)
    norms = np.sqrt(np.sum(mat * mat, axis=1, keepdims=True))
    safe = np.where(norms == 0.0, 1.0, norms)
    return mat / safe


def _stats(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = mat.mean(axis=0)
    var = np.mean((mat - mean) ** 2, axis=0)  # population divisor
    return mean, var


def compute_prototype_stats(prototypes: Sequence[Embedding] | np.ndarray) -> ContextStats:
    """Per-dimension mean and population variance of the prototype features."""
    mat = as_matrix(prototypes, NodeKind.PROTOTYPE)
    if mat.shape[0] < 2:
        raise StatsDegenerate("need at least 2 prototypes for variance statistics")
    mean, var = _stats(mat)
    return ContextStats(proto_mean=mean, proto_var=var)


def compute_fewshot_stats(fewshot: Sequence[Embedding] | np.ndarray) -> ContextStats:
    """Same statistics over the few-shot features, pooled across classes."""
    mat = as_matrix(fewshot, NodeKind.FEW_SHOT)
    if mat.shape[0] < 2:
        raise StatsDegenerate("need at least 2 few-shot samples for variance statistics")
    mean, var = _stats(mat)
    return ContextStats(
        proto_mean=np.zeros(mat.shape[1]),
        proto_var=np.zeros(mat.shape[1]),
        fewshot_mean=mean,
        fewshot_var=var,
    )


def merge_stats(proto: ContextStats, fewshot: ContextStats | None) -> ContextStats:
    if fewshot is None:
        return proto
    return ContextStats(
        proto_mean=proto.proto_mean,
        proto_var=proto.proto_var,
        fewshot_mean=fewshot.fewshot_mean,
        fewshot_var=fewshot.fewshot_var,
    )


def _as_vector(x: Embedding | np.ndarray) -> np.ndarray:
    if isinstance(x, Embedding):
        return x.values
    return np.asarray(x, dtype=np.float64).ravel()


def text_reweighted_similarity(query: Embedding | np.ndarray, target: Embedding | np.ndarray, proto_var: np.ndarray) -> float:
    """query . unit(proto_var * target); 0 when the weighted target vanishes."""
    q = _as_vector(query)
    t = _as_vector(target)
    weighted = unit_rows((proto_var * t)[None, :])[0]
    return float(np.dot(q, weighted))


def fewshot_reweighted_similarity(
    fewshot_sample: Embedding | np.ndarray, test: Embedding | np.ndarray, fewshot_var: np.ndarray
) -> float:
    """fewshot . unit((1 / (fewshot_var + eps)) * test)."""
    anchor = _as_vector(fewshot_sample)
    u = _as_vector(test)
    inv = 1.0 / (fewshot_var + RECIPROCAL_EPS)
    weighted = unit_rows((inv * u)[None, :])[0]
    return float(np.dot(anchor, weighted))


def target_weighted_block(weights: np.ndarray | None) -> BlockSimilarity:
    """Similarity with the weight applied to each candidate (test/prototype targets).

    ``weights=None`` means plain cosine up to one redundant re-normalization;
    the normalize-anyway path keeps the weighted and unweighted configurations
    on identical code so streamed and rebuilt rows agree exactly.
    """

    def sim(query: np.ndarray, targets: np.ndarray) -> np.ndarray:
        if targets.shape[0] == 0:
            return np.empty(0, dtype=np.float64)
        scaled = targets if weights is None else targets * weights
        return backend.dot_scan(unit_rows(scaled), np.ascontiguousarray(query))

    return sim


def query_weighted_block(weights: np.ndarray | None) -> BlockSimilarity:
    """Similarity with the weight applied to the query (few-shot targets).

    The few-shot anchors act as fixed probes; the arriving test vector is
    re-weighted, normalized, and dotted against every anchor.
    """

    def sim(query: np.ndarray, targets: np.ndarray) -> np.ndarray:
        if targets.shape[0] == 0:
            return np.empty(0, dtype=np.float64)
        probe = reweighted_target_cache_row(query, weights)
        return backend.dot_scan(np.ascontiguousarray(targets), probe)

    return sim


def reweighted_target_cache_row(vec: np.ndarray, weights: np.ndarray | None) -> np.ndarray:
    """The row a target contributes to a similarity cache: unit(weights * vec).

    Single-row twin of :func:`unit_rows`; the reduction matches the matrix
    path bit for bit (same elementwise square, same per-row pairwise sum),
    which the streamed-vs-rebuilt row equivalence depends on.
    """
    scaled = vec * weights if weights is not None else vec * 1.0
    norm = np.sqrt(np.sum(scaled * scaled))
    if norm == 0.0:
        return scaled
    scaled /= norm
    return scaled
