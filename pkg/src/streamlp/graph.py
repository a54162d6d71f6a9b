"""Blockwise sparse adjacency with bounded-degree rows.

Only test rows own outgoing edges; prototype and few-shot nodes gain
connectivity through symmetrization. Global node ids are stable:
prototypes occupy [0, C), few-shot samples [C, C + N_l), and test nodes
are appended after that in arrival order.

The streaming entry point is :meth:`BoundedRowGraph.expand`, which gives the
arriving node its own row by exact scans and offers the reverse edge to every
existing test row, replacing that row's weakest edge only when the newcomer
beats it. :func:`static_rows` builds the same structure from scratch by
exhaustive search and is the correctness reference for the streamed rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import backend
from .model import ContextStats, Embedding, HyperParams, NodeKind
from .reweight import (
    RECIPROCAL_EPS,
    BlockSimilarity,
    query_weighted_block,
    reweighted_target_cache_row,
    target_weighted_block,
    unit_rows,
)

_INITIAL_CAPACITY = 64


@dataclass(frozen=True)
class EdgeWeightConfig:
    """Which edge types use context re-weighting (ablation switches)."""

    reweight_tests: bool = True
    reweight_protos: bool = True
    reweight_fewshot: bool = True


@dataclass(frozen=True)
class NodeBlock:
    """One homogeneous candidate block: global ids plus row vectors."""

    ids: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return self.ids.shape[0]


@dataclass(frozen=True)
class NormalizedGraph:
    """Read-only symmetric propagation operator D^-1/2 (W + W^T)^g D^-1/2."""

    matrix: sp.csr_matrix
    n_proto: int
    n_fewshot: int
    n_test: int

    @property
    def n_nodes(self) -> int:
        return self.n_proto + self.n_fewshot + self.n_test


def knn_edges(
    query: Embedding | np.ndarray,
    block: NodeBlock,
    k: int,
    similarity: BlockSimilarity,
) -> tuple[np.ndarray, np.ndarray]:
    """Top-k candidates by similarity; ties to the lower node id.

    Returns (target ids, weights) in selection order. Weights are clamped at
    zero so a dissimilar candidate can be structurally present with no mass.
    An empty block yields empty arrays.
    """
    q = query.values if isinstance(query, Embedding) else np.asarray(query, dtype=np.float64)
    if len(block) == 0 or k <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    sims = similarity(q, block.vectors)
    pick = backend.top_k(sims, k)
    return block.ids[pick], np.maximum(sims[pick], 0.0)


class BoundedRowGraph:
    """Capacity-bounded weighted neighbor lists over the three node blocks."""

    def __init__(
        self,
        prototypes: np.ndarray,
        fewshot: Optional[np.ndarray],
        stats: ContextStats,
        hyper: HyperParams,
        config: EdgeWeightConfig = EdgeWeightConfig(),
    ) -> None:
        self.prototypes = np.ascontiguousarray(prototypes, dtype=np.float64)
        self.fewshot = None if fewshot is None else np.ascontiguousarray(fewshot, dtype=np.float64)
        self.hyper = hyper
        self.config = config
        self.stats = stats
        self.dim = self.prototypes.shape[1]
        self.n_proto = self.prototypes.shape[0]
        self.n_fewshot = 0 if self.fewshot is None else self.fewshot.shape[0]
        if self.fewshot is not None and self.fewshot.shape[1] != self.dim:
            raise ValueError("few-shot dimension does not match prototypes")
        if self.fewshot is not None and not stats.has_fewshot:
            raise ValueError("few-shot block present but stats carry no few-shot variance")

        self._test_weights = stats.proto_var if config.reweight_tests else None
        proto_w = stats.proto_var if config.reweight_protos else None
        if self.fewshot is not None and config.reweight_fewshot:
            fs_w = 1.0 / (stats.fewshot_var + RECIPROCAL_EPS)
        else:
            fs_w = None

        self.sim_tests = target_weighted_block(self._test_weights)
        self.sim_protos = target_weighted_block(proto_w)
        self.sim_fewshot = query_weighted_block(fs_w)
        self._fewshot_weights = fs_w
        # fixed anchors: reweight + normalize once, reused every arrival
        self._proto_cache = unit_rows(self.prototypes * proto_w) if proto_w is not None else unit_rows(self.prototypes)

        self.proto_block = NodeBlock(np.arange(self.n_proto, dtype=np.int64), self.prototypes)
        fs_ids = np.arange(self.n_proto, self.n_proto + self.n_fewshot, dtype=np.int64)
        self.fewshot_block = NodeBlock(fs_ids, self.fewshot if self.fewshot is not None else np.empty((0, self.dim)))

        cap = _INITIAL_CAPACITY
        self._raw = np.empty((cap, self.dim), dtype=np.float64)
        self._cache = np.empty((cap, self.dim), dtype=np.float64)
        self.n_test = 0

        def table(k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
            width = max(k, 1)
            return (
                np.zeros((cap, width), dtype=np.float64),
                np.full((cap, width), -1, dtype=np.int64),
                np.zeros(cap, dtype=np.int64),
            )

        self._pw, self._pt, self._pn = table(hyper.k_proto)
        self._tw, self._tt, self._tn = table(hyper.k_test)
        self._fw, self._ft, self._fn = table(hyper.k_fewshot)

    # -- layout helpers ----------------------------------------------------

    @property
    def test_base(self) -> int:
        return self.n_proto + self.n_fewshot

    @property
    def n_nodes(self) -> int:
        return self.test_base + self.n_test

    def test_block(self) -> NodeBlock:
        ids = np.arange(self.test_base, self.test_base + self.n_test, dtype=np.int64)
        return NodeBlock(ids, self._raw[: self.n_test])

    def proto_scores(self, vec: np.ndarray) -> np.ndarray:
        """Re-weighted similarity of one test vector to every prototype."""
        return self.sim_protos(np.asarray(vec, dtype=np.float64), self.prototypes)

    def _grow(self) -> None:
        cap = self._raw.shape[0] * 2
        for name in ("_raw", "_cache", "_pw", "_pt", "_tw", "_tt", "_fw", "_ft"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            if old.dtype == np.int64 and old.ndim == 2:
                new[:] = -1
            new[: old.shape[0]] = old
            setattr(self, name, new)
        for name in ("_pn", "_tn", "_fn"):
            old = getattr(self, name)
            new = np.zeros(cap, dtype=np.int64)
            new[: old.shape[0]] = old
            setattr(self, name, new)

    def _store_row(self, table: tuple[np.ndarray, np.ndarray, np.ndarray], row: int, ids: np.ndarray, w: np.ndarray) -> None:
        weights, targets, counts = table
        m = ids.shape[0]
        weights[row, :m] = w
        targets[row, :m] = ids
        counts[row] = m

    # -- streaming update ---------------------------------------------------

    def expand(self, new_test: Embedding | np.ndarray) -> int:
        """Insert one arriving test node; returns its global node id.

        The new row is exact top-k against each block; every existing test
        row is then offered the reverse edge under the bounded replacement
        rule. Cost is one similarity per existing node plus constant list
        surgery, O(d * n).
        """
        if isinstance(new_test, Embedding):
            if new_test.kind is not NodeKind.TEST:
                raise ValueError("expand takes test embeddings")
            vec = new_test.values
        else:
            vec = np.ascontiguousarray(new_test, dtype=np.float64)
        if vec.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: graph is {self.dim}-d, vector is {vec.shape[0]}-d")

        n = self.n_test
        if n == self._raw.shape[0]:
            self._grow()
        row = n

        backend.scan_select_store(self._proto_cache, vec, self.hyper.k_proto, self._pw, self._pt, self._pn, row, 0)

        if self.n_fewshot and self.hyper.k_fewshot > 0:
            fs_probe = reweighted_target_cache_row(vec, self._fewshot_weights)
            backend.scan_select_store(
                self.fewshot, fs_probe, self.hyper.k_fewshot, self._fw, self._ft, self._fn, row, self.n_proto
            )

        probe = reweighted_target_cache_row(vec, self._test_weights)
        if self.hyper.k_test > 0 and n > 0:
            backend.expand_test_block(
                self._cache[:n],
                self._raw[:n],
                vec,
                probe,
                self._tw,
                self._tt,
                self._tn,
                row,
                self.test_base,
                self.hyper.k_test,
            )

        self._raw[row] = vec
        self._cache[row] = probe
        self.n_test = n + 1
        return self.test_base + row

    def row_edges(self, row: int) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        """Stored (targets, weights) of one test row, per block, in slot order."""
        out = {}
        for name, (w, t, c) in (
            ("proto", (self._pw, self._pt, self._pn)),
            ("test", (self._tw, self._tt, self._tn)),
            ("fewshot", (self._fw, self._ft, self._fn)),
        ):
            m = int(c[row])
            out[name] = (t[row, :m].copy(), w[row, :m].copy())
        return out

    # -- snapshotting --------------------------------------------------------

    def finalize(self, gamma: Optional[float] = None) -> NormalizedGraph:
        """Symmetrize, sharpen and degree-normalize the current structure.

        Directed edges and their transposes are summed, the merged weights are
        raised elementwise to ``gamma``, and rows/columns are scaled by
        1/sqrt(degree) computed on the sharpened matrix. Zero-degree nodes
        stay as zero rows.
        """
        g = self.hyper.gamma if gamma is None else float(gamma)
        if g <= 0:
            raise ValueError("gamma must be > 0")
        n_nodes = self.n_nodes
        rows, cols, vals = [], [], []
        gids = np.arange(self.test_base, self.test_base + self.n_test, dtype=np.int64)
        for w, t, c in ((self._pw, self._pt, self._pn), (self._tw, self._tt, self._tn), (self._fw, self._ft, self._fn)):
            counts = c[: self.n_test]
            if counts.sum() == 0:
                continue
            width = w.shape[1]
            mask = np.arange(width)[None, :] < counts[:, None]
            rows.append(np.repeat(gids, counts))
            cols.append(t[: self.n_test][mask])
            vals.append(w[: self.n_test][mask])
        if rows:
            r = np.concatenate(rows)
            c = np.concatenate(cols)
            v = np.concatenate(vals)
        else:
            r = np.empty(0, dtype=np.int64)
            c = np.empty(0, dtype=np.int64)
            v = np.empty(0, dtype=np.float64)
        directed = sp.coo_matrix((v, (r, c)), shape=(n_nodes, n_nodes))
        merged = (directed + directed.T).tocsr()
        merged.data = np.power(merged.data, g)
        merged.eliminate_zeros()
        deg = np.asarray(merged.sum(axis=1)).ravel()
        dinv = np.zeros_like(deg)
        np.power(deg, -0.5, out=dinv, where=deg > 0)
        row_of = np.repeat(np.arange(n_nodes), np.diff(merged.indptr))
        merged.data *= dinv[row_of] * dinv[merged.indices]
        return NormalizedGraph(merged, self.n_proto, self.n_fewshot, self.n_test)


def static_rows(
    prototypes: np.ndarray,
    fewshot: Optional[np.ndarray],
    tests: np.ndarray,
    stats: ContextStats,
    hyper: HyperParams,
    config: EdgeWeightConfig = EdgeWeightConfig(),
) -> BoundedRowGraph:
    """Build every test row from scratch by exhaustive per-row search.

    The reference construction: each row's neighbors are chosen over the
    complete node population (excluding itself), so the last row always
    matches what :meth:`BoundedRowGraph.expand` produces for an arriving
    node over the same population.
    """
    g = BoundedRowGraph(prototypes, fewshot, stats, hyper, config)
    tests = np.ascontiguousarray(tests, dtype=np.float64)
    n = tests.shape[0]
    if n == 0:
        return g
    if tests.shape[1] != g.dim:
        raise ValueError("test dimension does not match prototypes")

    proto_cache = g._proto_cache
    test_cache = unit_rows(tests * stats.proto_var) if config.reweight_tests else unit_rows(tests)
    k_p, k_u, k_l = hyper.k_proto, hyper.k_test, hyper.k_fewshot

    for i in range(n):
        vec = tests[i]
        row = g.n_test
        if row == g._raw.shape[0]:
            g._grow()

        sims = backend.dot_scan(proto_cache, vec)
        pick = backend.top_k(sims, k_p)
        g._store_row((g._pw, g._pt, g._pn), row, g.proto_block.ids[pick], np.maximum(sims[pick], 0.0))

        if g.n_fewshot and k_l > 0:
            fsims = g.sim_fewshot(vec, g.fewshot)
            pick = backend.top_k(fsims, k_l)
            g._store_row((g._fw, g._ft, g._fn), row, g.fewshot_block.ids[pick], np.maximum(fsims[pick], 0.0))

        if k_u > 0 and n > 1:
            tsims = backend.dot_scan(test_cache, vec)
            tsims[i] = -np.inf  # no self-edge
            pick = backend.top_k(tsims, min(k_u, n - 1))
            g._store_row(
                (g._tw, g._tt, g._tn),
                row,
                (g.test_base + pick).astype(np.int64),
                np.maximum(tsims[pick], 0.0),
            )

        g._raw[row] = vec
        g._cache[row] = test_cache[i]
        g.n_test = row + 1
    return g


def rebuild_static(
    prototypes: np.ndarray,
    fewshot: Optional[np.ndarray],
    tests: np.ndarray,
    stats: ContextStats,
    hyper: HyperParams,
    config: EdgeWeightConfig = EdgeWeightConfig(),
) -> NormalizedGraph:
    """Full from-scratch construction + finalize over a complete node set."""
    return static_rows(prototypes, fewshot, tests, stats, hyper, config).finalize()
