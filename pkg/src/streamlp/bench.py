"""Wall-clock scaling benchmark: from-scratch rebuilds vs streaming expansion.

For each target stream length the benchmark reports the total construction
time of (a) rebuilding the whole graph at every arrival and (b) expanding it
incrementally. The incremental path is measured arrival by arrival; the
rebuild path would take hours at the larger sizes, so per-rebuild cost is
measured at sampled population sizes and summed over arrivals through
interpolation (the curve is smooth in n, so the estimate is tight). Growth
exponents come from a log-log least-squares fit of total time against stream
length.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import backend
from .graph import BoundedRowGraph, NodeBlock, static_rows
from .model import HyperParams
from .oracle import exhaustive_knn
from .reweight import compute_prototype_stats, unit_rows

_STATIC_SAMPLES = 12
_MIN_SAMPLE = 8


@dataclass
class BenchResult:
    node_counts: list[int]
    dynamic_totals: list[float]
    static_totals: list[float]
    dynamic_exponent: float
    static_exponent: float
    backend: str

    def to_table(self) -> str:
        lines = [
            f"graph construction scaling (backend: {self.backend})",
            f"{'nodes':>8} {'dynamic total [s]':>18} {'static total [s]*':>18}",
        ]
        for n, dyn, stat in zip(self.node_counts, self.dynamic_totals, self.static_totals):
            lines.append(f"{n:>8} {dyn:>18.4f} {stat:>18.4f}")
        lines.append(f"fitted exponent: dynamic {self.dynamic_exponent:.2f}, static {self.static_exponent:.2f}")
        lines.append("* static totals are integrated from rebuild timings at sampled sizes")
        return "\n".join(lines)


def _random_population(n: int, d: int, seed: int, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    protos = unit_rows(rng.standard_normal((n_classes, d)))
    tests = unit_rows(rng.standard_normal((n, d)))
    return protos, tests


def measure_dynamic(tests: np.ndarray, protos: np.ndarray, hyper: HyperParams) -> np.ndarray:
    """Per-arrival expand times over the full stream."""
    stats = compute_prototype_stats(protos)
    graph = BoundedRowGraph(protos, None, stats, hyper)
    out = np.empty(tests.shape[0])
    for i in range(tests.shape[0]):
        t0 = time.perf_counter()
        graph.expand(tests[i])
        out[i] = time.perf_counter() - t0
    return out


def _measure_dynamic_min(tests: np.ndarray, protos: np.ndarray, hyper: HyperParams, repeats: int) -> np.ndarray:
    # warm-up stream flushes allocator/code-path cold starts, then keep the
    # per-arrival minimum over repeats to shed scheduler noise
    measure_dynamic(tests[: min(300, tests.shape[0])], protos, hyper)
    best = measure_dynamic(tests, protos, hyper)
    for _ in range(repeats - 1):
        best = np.minimum(best, measure_dynamic(tests, protos, hyper))
    return best


def measure_static_samples(
    tests: np.ndarray, protos: np.ndarray, hyper: HyperParams, sizes: np.ndarray, repeats: int = 1
) -> np.ndarray:
    """Full-rebuild time per sampled population size (min over repeats)."""
    stats = compute_prototype_stats(protos)
    out = np.full(sizes.shape[0], np.inf)
    for _ in range(repeats):
        for k, n in enumerate(sizes):
            t0 = time.perf_counter()
            static_rows(protos, None, tests[:n], stats, hyper)
            out[k] = min(out[k], time.perf_counter() - t0)
    return out


def _fit_exponent(ns: list[int], totals: list[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(totals)), 1)
    return float(slope)


def audit_new_rows(tests: np.ndarray, protos: np.ndarray, hyper: HyperParams) -> int:
    """Equivalence audit: every arriving node's streamed edges must equal an
    exhaustive from-scratch selection over the same population. Returns the
    number of audited arrivals; raises on the first divergence."""
    stats = compute_prototype_stats(protos)
    g = BoundedRowGraph(protos, None, stats, hyper)
    for i in range(tests.shape[0]):
        g.expand(tests[i])
        got = g.row_edges(i)
        want_p = exhaustive_knn(tests[i], g.proto_block, hyper.k_proto, g.sim_protos)
        prior = NodeBlock(np.arange(g.test_base, g.test_base + i, dtype=np.int64), g._raw[:i])
        want_t = exhaustive_knn(tests[i], prior, hyper.k_test, g.sim_tests)
        if not (
            np.array_equal(got["proto"][0], want_p[0])
            and np.array_equal(got["proto"][1], want_p[1])
            and np.array_equal(got["test"][0], want_t[0])
            and np.array_equal(got["test"][1], want_t[1])
        ):
            raise AssertionError(f"streamed row {i} diverges from the exhaustive selection")
    return tests.shape[0]


def bench_construction(
    node_counts: list[int],
    d: int = 64,
    seed: int = 0,
    n_classes: int = 16,
    hyper: HyperParams = HyperParams(),
    repeats: int = 2,
    audit: bool = False,
) -> BenchResult:
    node_counts = sorted(node_counts)
    n_max = node_counts[-1]
    if n_max < 1000:
        raise ValueError("need a maximum node count of at least 1000 for a meaningful fit")
    protos, tests = _random_population(n_max, d, seed, n_classes)

    if audit:
        # correctness pass first (untimed): streamed rows == exhaustive selection
        audit_new_rows(tests[: min(n_max, 500)], protos, hyper)

    per_arrival = _measure_dynamic_min(tests, protos, hyper, repeats)
    cumulative = np.cumsum(per_arrival)
    dynamic_totals = [float(cumulative[n - 1]) for n in node_counts]

    sample_sizes = np.unique(
        np.concatenate(
            [
                np.geomspace(_MIN_SAMPLE, n_max, _STATIC_SAMPLES).astype(int),
                np.asarray(node_counts, dtype=int),
            ]
        )
    )
    sample_times = measure_static_samples(tests, protos, hyper, sample_sizes, repeats)
    grid = np.arange(1, n_max + 1, dtype=float)
    rebuild_at = np.interp(grid, sample_sizes.astype(float), sample_times)
    static_cumulative = np.cumsum(rebuild_at)
    static_totals = [float(static_cumulative[n - 1]) for n in node_counts]

    return BenchResult(
        node_counts=node_counts,
        dynamic_totals=dynamic_totals,
        static_totals=static_totals,
        dynamic_exponent=_fit_exponent(node_counts, dynamic_totals),
        static_exponent=_fit_exponent(node_counts, static_totals),
        backend=backend.active_backend(),
    )


def compare_backends(n: int = 1500, d: int = 64, seed: int = 0, n_classes: int = 16) -> dict[str, float]:
    """Total expand time for the same stream under each available backend."""
    protos, tests = _random_population(n, d, seed, n_classes)
    original = backend.active_backend()
    totals: dict[str, float] = {}
    try:
        for name in backend.available_backends():
            backend.use_backend(name)
            totals[name] = float(measure_dynamic(tests, protos, HyperParams()).sum())
    finally:
        backend.use_backend(original)
    return totals
