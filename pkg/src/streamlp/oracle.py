"""Brute-force reference implementations used by tests, benchmarks and
the CLI's --oracle-check mode.

Deliberately naive and independent of the engine's sparse code paths: dense
matrices, full sorts, its own normalization. Nothing here imports the graph,
propagation or kernel modules.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .model import ContextStats, HyperParams

FEWSHOT_EPS = 1e-8


class OracleSingular(ValueError):
    """The closed-form system is singular (alpha too close to 1, or bad W)."""


def closed_form_lp(W_norm: np.ndarray, Y0: np.ndarray, alpha: float) -> np.ndarray:
    """Solve (I - alpha * W_norm) Y = Y0 by dense factorization.

    Valid for alpha strictly inside (0, 1), where the system is guaranteed
    invertible for a normalized adjacency. This is the infinite-iteration
    limit of the propagation rule up to the constant (1 - alpha) factor.
    """
    W = np.asarray(W_norm, dtype=np.float64)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be strictly inside (0, 1)")
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W_norm must be square")
    if W.shape[0] > 500:
        raise ValueError("dense oracle capped at 500 nodes")
    system = np.eye(W.shape[0]) - alpha * W
    try:
        return np.linalg.solve(system, np.asarray(Y0, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise OracleSingular(str(exc)) from exc


def exhaustive_knn(query, block, k: int, similarity) -> tuple[np.ndarray, np.ndarray]:
    """Full sort of every candidate; top-k with (similarity desc, id asc) order.

    Same output contract as graph.knn_edges (clamped weights, selection
    order), but via an explicit sort of all candidates.
    """
    q = np.asarray(getattr(query, "values", query), dtype=np.float64)
    n = len(block)
    if n == 0 or k <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    sims = similarity(q, block.vectors)
    order = sorted(range(n), key=lambda i: (-sims[i], block.ids[i]))[: min(k, n)]
    ids = np.asarray([block.ids[i] for i in order], dtype=np.int64)
    weights = np.asarray([max(sims[i], 0.0) for i in order], dtype=np.float64)
    return ids, weights


def _unit(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / np.where(norms == 0.0, 1.0, norms)


def _topk_desc(scores: np.ndarray, k: int) -> list[int]:
    return sorted(range(scores.shape[0]), key=lambda j: (-scores[j], j))[: min(k, scores.shape[0])]


def dense_pipeline(
    prototypes: np.ndarray,
    tests: np.ndarray,
    stats: ContextStats,
    hyper: HyperParams,
    fewshot: Optional[np.ndarray] = None,
    fewshot_labels: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """End-to-end transductive predictions with dense matrices only.

    Builds the full similarity matrices, takes per-row top-k, symmetrizes,
    sharpens, degree-normalizes and propagates with anchor resets, all with
    plain dense numpy. The streaming engine in transductive mode must agree
    with this on identical inputs.
    """
    P = np.asarray(prototypes, dtype=np.float64)
    U = np.asarray(tests, dtype=np.float64)
    C, d = P.shape
    n_u = U.shape[0]
    L = None if fewshot is None else np.asarray(fewshot, dtype=np.float64)
    n_l = 0 if L is None else L.shape[0]
    n_nodes = C + n_l + n_u
    if n_nodes > 500:
        raise ValueError("dense oracle capped at 500 nodes")

    proto_scores = U @ _unit(P * stats.proto_var).T
    W = np.zeros((n_nodes, n_nodes), dtype=np.float64)
    base_u = C + n_l
    for i in range(n_u):
        for j in _topk_desc(proto_scores[i], hyper.k_proto):
            W[base_u + i, j] = max(proto_scores[i, j], 0.0)

    if hyper.k_test > 0 and n_u > 1:
        test_scores = U @ _unit(U * stats.proto_var).T
        for i in range(n_u):
            row = test_scores[i].copy()
            row[i] = -np.inf
            for j in _topk_desc(row, min(hyper.k_test, n_u - 1)):
                W[base_u + i, base_u + j] = max(row[j], 0.0)

    if L is not None and hyper.k_fewshot > 0:
        inv = 1.0 / (stats.fewshot_var + FEWSHOT_EPS)
        fs_scores = _unit(U * inv) @ L.T
        for i in range(n_u):
            for j in _topk_desc(fs_scores[i], hyper.k_fewshot):
                W[base_u + i, C + j] = max(fs_scores[i, j], 0.0)

    W = W + W.T
    W = W**hyper.gamma
    deg = W.sum(axis=1)
    dinv = np.where(deg > 0, deg, 1.0) ** -0.5
    dinv[deg == 0] = 0.0
    Wn = dinv[:, None] * W * dinv[None, :]

    Y0 = np.zeros((n_nodes, C), dtype=np.float64)
    Y0[:C, :C] = np.eye(C)
    if n_l:
        labels = np.asarray(fewshot_labels, dtype=np.int64)
        Y0[C + np.arange(n_l), labels] = 1.0
    Y = Y0.copy()
    for _ in range(hyper.iters):
        Y = Wn @ Y
        if hyper.alpha != 1.0:
            Y = hyper.alpha * Y + (1.0 - hyper.alpha) * Y0
        Y[:base_u] = Y0[:base_u]

    preds = np.empty(n_u, dtype=np.int64)
    for i in range(n_u):
        row = Y[base_u + i]
        scores = proto_scores[i] if not np.any(row) else row
        preds[i] = int(np.argmax(scores))
    return preds
