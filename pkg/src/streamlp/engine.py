"""Session orchestration: run the per-arrival loop over a test stream.

Each arrival expands the graph, snapshots the normalized operator, runs the
fixed number of propagation steps with anchor resets, emits the newcomer's
prediction, and attenuates the pseudo-labels for the next arrival. The
report carries the online (at-arrival) accuracy as the headline number plus
a transductive re-read of all rows after the final arrival.

Transductive mode skips the stream entirely: the full static graph is built
once and every row is predicted from a single propagation pass.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import backend
from .graph import BoundedRowGraph, EdgeWeightConfig, NodeBlock, static_rows
from .model import ContextStats, HyperParams, LabelState
from .oracle import dense_pipeline, exhaustive_knn
from .propagate import attenuate, init_labels, predict, run_propagation
from .reweight import compute_fewshot_stats, compute_prototype_stats, merge_stats


class OracleMismatch(RuntimeError):
    """--oracle-check found a disagreement between engine and reference."""


@dataclass
class SessionData:
    """Unit-normalized float64 inputs for one session."""

    prototypes: np.ndarray
    class_names: list[str]
    tests: np.ndarray
    labels: Optional[np.ndarray] = None
    fewshot: Optional[np.ndarray] = None
    fewshot_labels: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.prototypes.shape[0] != len(self.class_names):
            raise ValueError("prototype count must equal the number of class names")
        d = self.prototypes.shape[1]
        if self.tests.shape[1] != d:
            raise ValueError(f"test dimension {self.tests.shape[1]} != prototype dimension {d}")
        if self.fewshot is not None:
            if self.fewshot.shape[1] != d:
                raise ValueError("few-shot dimension mismatch")
            if self.fewshot_labels is None or len(self.fewshot_labels) != self.fewshot.shape[0]:
                raise ValueError("few-shot block needs one class label per row")
        if self.labels is not None and len(self.labels) != self.tests.shape[0]:
            raise ValueError("ground-truth labels must cover every test row")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class EngineConfig:
    hyper: HyperParams = HyperParams()
    edges: EdgeWeightConfig = EdgeWeightConfig()
    transductive: bool = False
    oracle_check: bool = False
    validate: bool = False


@dataclass
class RunReport:
    predictions: list[int]
    online_accuracy: Optional[float]
    transductive_accuracy: Optional[float]
    baseline_accuracy: Optional[float]
    online_correct: Optional[int]
    transductive_correct: Optional[int]
    n_samples: int
    wall_times: list[float]
    config: dict

    def deterministic_doc(self) -> dict:
        """Everything except the measured timings, for byte-stable reports."""
        return {
            "config": self.config,
            "n_samples": self.n_samples,
            "predictions": self.predictions,
            "online_correct": self.online_correct,
            "online_accuracy": self.online_accuracy,
            "transductive_correct": self.transductive_correct,
            "transductive_accuracy": self.transductive_accuracy,
            "baseline_accuracy": self.baseline_accuracy,
        }

    def to_json(self) -> str:
        return json.dumps(self.deterministic_doc(), sort_keys=True, indent=2) + "\n"

    def write(self, path: str | Path) -> None:
        """Write the canonical report; timings go to a separate sidecar.

        Wall-clock values are inherently non-reproducible, so they live in
        ``<path>.timing.json`` and the report itself stays byte-identical
        across identical runs.
        """
        path = Path(path)
        path.write_text(self.to_json())
        timing = {"wall_times": self.wall_times, "total": float(sum(self.wall_times))}
        Path(str(path) + ".timing.json").write_text(json.dumps(timing) + "\n")


def session_stats(data: SessionData) -> ContextStats:
    proto = compute_prototype_stats(data.prototypes)
    few = compute_fewshot_stats(data.fewshot) if data.fewshot is not None else None
    return merge_stats(proto, few)


def _accuracy(preds: np.ndarray, labels: Optional[np.ndarray]) -> tuple[Optional[int], Optional[float]]:
    if labels is None:
        return None, None
    correct = int(np.sum(preds == labels))
    return correct, correct / len(labels)


def _config_echo(data: SessionData, config: EngineConfig, extra: Optional[dict]) -> dict:
    doc = {
        "hyper": {
            "kp": config.hyper.k_proto,
            "ku": config.hyper.k_test,
            "kl": config.hyper.k_fewshot,
            "gamma": config.hyper.gamma,
            "beta": config.hyper.beta,
            "alpha": config.hyper.alpha,
            "iters": config.hyper.iters,
        },
        "text_reweight": config.edges.reweight_tests,
        "proto_reweight": config.edges.reweight_protos,
        "fewshot_reweight": config.edges.reweight_fewshot,
        "transductive": config.transductive,
        "n_classes": data.n_classes,
        "n_fewshot": 0 if data.fewshot is None else int(data.fewshot.shape[0]),
        "dim": int(data.prototypes.shape[1]),
        "backend": backend.active_backend(),
    }
    if extra:
        doc.update(extra)
    return doc


def _audit_new_row(graph: BoundedRowGraph, vec: np.ndarray, row: int, n_before: int) -> None:
    """Check the arriving node's stored row against an exhaustive re-selection."""
    stored = graph.row_edges(row)
    checks = [("proto", graph.proto_block, graph.hyper.k_proto, graph.sim_protos)]
    if graph.n_fewshot and graph.hyper.k_fewshot > 0:
        checks.append(("fewshot", graph.fewshot_block, graph.hyper.k_fewshot, graph.sim_fewshot))
    if graph.hyper.k_test > 0:
        prior = NodeBlock(
            np.arange(graph.test_base, graph.test_base + n_before, dtype=np.int64),
            graph._raw[:n_before],
        )
        checks.append(("test", prior, graph.hyper.k_test, graph.sim_tests))
    for name, block, k, sim in checks:
        want_ids, want_w = exhaustive_knn(vec, block, k, sim)
        got_ids, got_w = stored[name]
        if not (np.array_equal(want_ids, got_ids) and np.array_equal(want_w, got_w)):
            raise OracleMismatch(f"row {row}: {name} edges diverge from exhaustive selection")


def _transductive_run(data: SessionData, config: EngineConfig, stats: ContextStats, echo: dict) -> RunReport:
    t0 = time.perf_counter()
    graph = static_rows(data.prototypes, data.fewshot, data.tests, stats, config.hyper, config.edges)
    wn = graph.finalize()
    y0 = init_labels(data.n_classes, data.fewshot_labels, graph.n_test)
    y_final = run_propagation(wn, y0, config.hyper, validate=config.validate)
    preds = np.empty(graph.n_test, dtype=np.int64)
    for i in range(graph.n_test):
        row = y_final.test[i]
        fallback = None if np.any(row) else graph.proto_scores(data.tests[i])
        preds[i] = predict(y_final, i, fallback)
    elapsed = time.perf_counter() - t0

    if config.oracle_check:
        want = dense_pipeline(
            data.prototypes, data.tests, stats, config.hyper, data.fewshot, data.fewshot_labels
        )
        if not np.array_equal(want, preds):
            bad = int(np.nonzero(want != preds)[0][0])
            raise OracleMismatch(f"transductive prediction {bad} disagrees with dense reference")

    correct, acc = _accuracy(preds, data.labels)
    baseline = _baseline_accuracy(data)
    return RunReport(
        predictions=[int(p) for p in preds],
        online_accuracy=None,
        transductive_accuracy=acc,
        baseline_accuracy=baseline,
        online_correct=None,
        transductive_correct=correct,
        n_samples=int(data.tests.shape[0]),
        wall_times=[elapsed],
        config=echo,
    )


def _baseline_accuracy(data: SessionData) -> Optional[float]:
    if data.labels is None:
        return None
    baseline_preds = np.argmax(data.tests @ data.prototypes.T, axis=1)
    return float(np.mean(baseline_preds == data.labels))


def run_stream(data: SessionData, config: EngineConfig = EngineConfig(), echo: Optional[dict] = None) -> RunReport:
    """Execute the full arrival loop (or one static pass in transductive mode)."""
    stats = session_stats(data)
    config_doc = _config_echo(data, config, echo)
    if config.transductive:
        return _transductive_run(data, config, stats, config_doc)

    hyper = config.hyper
    n_classes = data.n_classes
    graph = BoundedRowGraph(data.prototypes, data.fewshot, stats, hyper, config.edges)
    proto_y = np.eye(n_classes)
    y0_template = init_labels(n_classes, data.fewshot_labels, 0)

    n_stream = data.tests.shape[0]
    preds = np.empty(n_stream, dtype=np.int64)
    wall = []
    carried = np.zeros((0, n_classes), dtype=np.float64)
    y_final: Optional[LabelState] = None

    for i in range(n_stream):
        vec = data.tests[i]
        t0 = time.perf_counter()
        n_before = graph.n_test
        graph.expand(vec)
        n_now = graph.n_test
        if carried.shape[0] != n_now:
            carried = np.vstack([carried, np.zeros((n_now - carried.shape[0], n_classes))])
        wn = graph.finalize()
        y0 = LabelState(proto=proto_y.copy(), fewshot=y0_template.fewshot.copy(), test=carried)
        y_final = run_propagation(wn, y0, hyper, validate=config.validate)
        row = y_final.test[n_now - 1]
        fallback = None if np.any(row) else graph.proto_scores(vec)
        preds[i] = predict(y_final, n_now - 1, fallback)
        carried = attenuate(y_final, hyper.beta)
        wall.append(time.perf_counter() - t0)
        if config.oracle_check:
            _audit_new_row(graph, vec, n_now - 1, n_before)

    online_correct, online_acc = _accuracy(preds, data.labels)

    trans_correct = trans_acc = None
    if y_final is not None and data.labels is not None:
        final_preds = np.empty(n_stream, dtype=np.int64)
        for i in range(n_stream):
            row = y_final.test[i]
            fallback = None if np.any(row) else graph.proto_scores(graph._raw[i])
            final_preds[i] = predict(y_final, i, fallback)
        trans_correct, trans_acc = _accuracy(final_preds, data.labels)

    return RunReport(
        predictions=[int(p) for p in preds],
        online_accuracy=online_acc,
        transductive_accuracy=trans_acc,
        baseline_accuracy=_baseline_accuracy(data),
        online_correct=online_correct,
        transductive_correct=trans_correct,
        n_samples=n_stream,
        wall_times=wall,
        config=config_doc,
    )


def hard_first_order(prototypes: np.ndarray, tests: np.ndarray, labels: np.ndarray, frac: float, seed: int) -> np.ndarray:
    """Stream permutation placing baseline-misclassified samples in the head.

    The first ``frac`` of the stream is drawn from the samples the plain
    nearest-prototype baseline gets wrong; the remainder is a random shuffle
    of everything else.
    """
    rng = np.random.default_rng(seed)
    baseline = np.argmax(tests @ prototypes.T, axis=1)
    hard = np.nonzero(baseline != labels)[0]
    n_head = min(int(round(frac * len(labels))), hard.shape[0])
    head = rng.permutation(hard)[:n_head]
    rest = np.setdiff1d(np.arange(len(labels)), head)
    return np.concatenate([head, rng.permutation(rest)])
