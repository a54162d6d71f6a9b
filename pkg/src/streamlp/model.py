"""Shared domain types for the streaming label-propagation engine.

Everything downstream (re-weighting, graph, propagation, engine) speaks in
terms of these types. They are plain immutable-by-convention values: once
constructed they are never mutated in place, so they are safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

UNIT_NORM_TOL = 1e-4


class StatsDegenerate(ValueError):
    """Raised when context statistics are requested for fewer than 2 vectors."""


class InvalidLabel(ValueError):
    """Raised when a class label falls outside [0, C)."""


class NodeKind(Enum):
    PROTOTYPE = "prototype"
    FEW_SHOT = "few_shot"
    TEST = "test"


@dataclass(frozen=True)
class Embedding:
    """A unit-length feature vector tagged with its role in the graph.

    Non-unit inputs are normalized on construction; zero vectors are
    rejected. ``class_id`` must be present for prototype/few-shot nodes
    and absent for test nodes.
    """

    values: np.ndarray
    kind: NodeKind
    class_id: Optional[int] = None

    def __post_init__(self) -> None:
        vec = np.asarray(self.values, dtype=np.float64).ravel()
        if vec.size < 1:
            raise ValueError("embedding must have at least one dimension")
        norm = float(np.sqrt(np.dot(vec, vec)))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            vec = vec / norm
        object.__setattr__(self, "values", vec)
        if self.kind is NodeKind.TEST:
            if self.class_id is not None:
                raise ValueError("test embeddings carry no class id")
        else:
            if self.class_id is None or self.class_id < 0:
                raise InvalidLabel(f"{self.kind.value} embedding needs a non-negative class id")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class HyperParams:
    """Graph and propagation knobs, fixed across tasks.

    ``k_proto``/``k_test``/``k_fewshot`` bound the per-row neighbor counts
    toward each node block; ``gamma`` is the edge-sharpening exponent,
    ``beta`` the carry-over attenuation for pseudo-labels, ``alpha`` the
    propagation mixing factor, and ``iters`` the number of propagation
    steps per arrival.
    """

    k_proto: int = 3
    k_test: int = 8
    k_fewshot: int = 8
    gamma: float = 10.0
    beta: float = 0.2
    alpha: float = 1.0
    iters: int = 3

    def __post_init__(self) -> None:
        if self.k_proto < 1:
            raise ValueError("k_proto must be >= 1")
        # 0 disables a block entirely (used by ablations); negative is nonsense
        if self.k_test < 0 or self.k_fewshot < 0:
            raise ValueError("k_test/k_fewshot must be >= 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")


@dataclass
class LabelState:
    """Class-score matrix partitioned into [prototype; few-shot; test] blocks.

    ``proto`` is C x C, ``fewshot`` is N_l x C, ``test`` is N_u x C; the test
    block grows as the stream advances. Entries are always >= 0.
    """

    proto: np.ndarray
    fewshot: np.ndarray
    test: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.proto.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.proto.shape[0] + self.fewshot.shape[0] + self.test.shape[0]

    def stacked(self) -> np.ndarray:
        return np.vstack([self.proto, self.fewshot, self.test])

    @classmethod
    def from_stacked(cls, mat: np.ndarray, n_proto: int, n_fewshot: int) -> "LabelState":
        return cls(
            proto=mat[:n_proto],
            fewshot=mat[n_proto : n_proto + n_fewshot],
            test=mat[n_proto + n_fewshot :],
        )

    def copy(self) -> "LabelState":
        return LabelState(self.proto.copy(), self.fewshot.copy(), self.test.copy())


@dataclass(frozen=True)
class ContextStats:
    """Per-dimension mean/variance of the anchor features.

    ``proto_var`` is the population variance of the prototype features and
    drives the amplifying re-weighting; ``fewshot_var`` (present only when
    a few-shot set exists) drives the reciprocal suppression. Means are kept
    for diagnostics only.
    """

    proto_mean: np.ndarray
    proto_var: np.ndarray
    fewshot_mean: Optional[np.ndarray] = None
    fewshot_var: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if np.any(self.proto_var < 0):
            raise ValueError("prototype variance must be non-negative")
        if (self.fewshot_mean is None) != (self.fewshot_var is None):
            raise ValueError("few-shot mean/variance must be set together")
        if self.fewshot_var is not None and np.any(self.fewshot_var < 0):
            raise ValueError("few-shot variance must be non-negative")

    @property
    def has_fewshot(self) -> bool:
        return self.fewshot_var is not None


def as_matrix(embeddings: Sequence[Embedding] | np.ndarray, kind: NodeKind | None = None) -> np.ndarray:
    """Stack embeddings into an (n, d) float64 matrix, checking kind and dim."""
    if isinstance(embeddings, np.ndarray):
        mat = np.ascontiguousarray(embeddings, dtype=np.float64)
        if mat.ndim != 2:
            raise ValueError("expected a 2-D array of row vectors")
        return mat
    if len(embeddings) == 0:
        raise ValueError("empty embedding sequence")
    dims = {e.dim for e in embeddings}
    if len(dims) != 1:
        raise ValueError(f"mixed embedding dimensions: {sorted(dims)}")
    if kind is not None:
        bad = [e.kind for e in embeddings if e.kind is not kind]
        if bad:
            raise ValueError(f"expected only {kind.value} embeddings, got {bad[0].value}")
    return np.ascontiguousarray(np.stack([e.values for e in embeddings]))
