"""Pure-numpy implementations of the hot streaming kernels.

Semantics are shared with the compiled backend in ``_kernels_cy``: every
function here must produce the same targets and weights for the same inputs
(tie-breaking included). Keep the two in lockstep.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_INT_MAX = np.iinfo(np.int64).max


def dot_scan(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Row-wise dot products of an (n, d) matrix against one d-vector."""
    return mat @ vec


def top_k(sims: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest similarities; ties go to the lower index."""
    n = sims.shape[0]
    if k <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((np.arange(n), -sims))
    return order[: min(k, n)].astype(np.int64)


def replace_weakest(
    weights: np.ndarray,
    targets: np.ndarray,
    counts: np.ndarray,
    sims: np.ndarray,
    new_id: int,
    capacity: int,
) -> None:
    """Bounded-degree reverse update: offer edge (row -> new_id, sims[row]) to every row.

    Rows below capacity append; full rows replace their weakest edge only when
    the offer beats it (weakest = lowest weight, ties resolved to the lowest
    target id). Stored weights are clamped at zero. In-place on the first
    three arrays, which are (n, capacity), (n, capacity) and (n,) views.
    """
    n = counts.shape[0]
    if n == 0 or capacity <= 0:
        return
    clamped = np.maximum(sims, 0.0)

    grow = counts < capacity
    if np.any(grow):
        rows = np.nonzero(grow)[0]
        slots = counts[rows]
        weights[rows, slots] = clamped[rows]
        targets[rows, slots] = new_id
        counts[rows] += 1

    full = ~grow
    if np.any(full):
        rows = np.nonzero(full)[0]
        w = weights[rows]
        min_w = w.min(axis=1)
        beat = sims[rows] > min_w
        if np.any(beat):
            rows = rows[beat]
            w = w[beat]
            min_w = min_w[beat]
            t = targets[rows]
            at_min = w == min_w[:, None]
            min_t = np.where(at_min, t, _INT_MAX).min(axis=1)
            slot = np.argmax(at_min & (t == min_t[:, None]), axis=1)
            weights[rows, slot] = clamped[rows]
            targets[rows, slot] = new_id


def scan_select_store(
    cache: np.ndarray,
    vec: np.ndarray,
    k: int,
    weights: np.ndarray,
    targets: np.ndarray,
    counts: np.ndarray,
    row: int,
    base_id: int,
) -> None:
    """Scan one block, keep the top-k, store them as row ``row``'s edges."""
    if k <= 0 or cache.shape[0] == 0:
        counts[row] = 0
        return
    sims = dot_scan(cache, vec)
    pick = top_k(sims, k)
    m = pick.shape[0]
    weights[row, :m] = np.maximum(sims[pick], 0.0)
    targets[row, :m] = base_id + pick
    counts[row] = m


def expand_test_block(
    cache: np.ndarray,
    raw: np.ndarray,
    vec: np.ndarray,
    probe: np.ndarray,
    weights: np.ndarray,
    targets: np.ndarray,
    counts: np.ndarray,
    row: int,
    base_id: int,
    k: int,
) -> None:
    """Fused test-block update for one arrival.

    Gives the new row (index ``row``) its top-k edges over the ``row``
    existing test nodes, then offers the reverse edge to every existing row
    under the bounded replacement rule. ``cache``/``raw`` hold exactly the
    existing nodes; the edge tables must have at least ``row + 1`` rows.
    """
    scan_select_store(cache, vec, k, weights, targets, counts, row, base_id)
    reverse = dot_scan(raw, probe)
    replace_weakest(weights[:row], targets[:row], counts[:row], reverse, base_id + row, k)
