"""Command-line entry point.

One command, three auxiliary modes:

    streamlp --prototypes p.eclp --test t.eclp --sidecar s.json [--report out.json]
    streamlp --gen --classes 10 --per-class 100 --dim 64 --noise 0.3 --out-dir data/
    streamlp --bench [--bench-sizes 500 1000 2000 4000] [--dim 64]
    streamlp --ablate [--seeds 0 1 2 3 4]

Exit codes: 0 success, 2 ingest error, 3 configuration error,
4 oracle-check mismatch.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import backend
from .ablate import ablate_components, ablate_k_sweep, components_table, sweep_table
from .bench import bench_construction, compare_backends
from .engine import EngineConfig, OracleMismatch, SessionData, run_stream
from .graph import EdgeWeightConfig
from .io import IngestError, normalize_rows, read_embeddings, read_sidecar
from .model import HyperParams
from .synthetic import GeneratorError, generate_synthetic

EXIT_OK = 0
EXIT_INGEST = 2
EXIT_CONFIG = 3
EXIT_ORACLE = 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamlp", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    files = p.add_argument_group("input files")
    files.add_argument("--prototypes", help="prototype embedding file (one row per class)")
    files.add_argument("--test", help="test stream embedding file")
    files.add_argument("--fewshot", help="optional few-shot embedding file")
    files.add_argument("--sidecar", help="label sidecar (class names, labels, few-shot classes)")

    knobs = p.add_argument_group("hyperparameters")
    knobs.add_argument("--kp", type=int, default=3, help="test-to-prototype neighbors (default 3)")
    knobs.add_argument("--ku", type=int, default=8, help="test-to-test neighbors (default 8; 0 disables)")
    knobs.add_argument("--kl", type=int, default=8, help="test-to-few-shot neighbors (default 8; 0 disables)")
    knobs.add_argument("--gamma", type=float, default=10.0, help="edge sharpening exponent (default 10)")
    knobs.add_argument("--beta", type=float, default=0.2, help="pseudo-label carry-over factor (default 0.2)")
    knobs.add_argument("--alpha", type=float, default=1.0, help="propagation mixing factor (default 1.0)")
    knobs.add_argument("--iters", type=int, default=3, help="propagation steps per arrival (default 3)")

    switches = p.add_argument_group("ablation switches")
    switches.add_argument("--no-text-reweight", action="store_true", help="plain cosine for test/prototype targets")
    switches.add_argument("--no-fewshot-reweight", action="store_true", help="plain cosine for few-shot edges")
    switches.add_argument(
        "--text-reweight-scope",
        choices=["both", "test", "proto"],
        default="both",
        help="restrict text re-weighting to one edge type (default both)",
    )

    modes = p.add_argument_group("modes")
    modes.add_argument("--transductive", action="store_true", help="single static pass over the whole test set")
    modes.add_argument("--oracle-check", action="store_true", help="verify against brute-force references while running")
    modes.add_argument("--bench", action="store_true", help="run the construction scaling benchmark")
    modes.add_argument("--gen", action="store_true", help="generate a synthetic dataset")
    modes.add_argument("--ablate", action="store_true", help="run the component/neighbor-count ablations")

    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the run report (JSON) to this path")
    p.add_argument(
        "--backend",
        choices=["auto", "python", "compiled"],
        default=os.environ.get("STREAMLP_BACKEND", "auto"),
        help="kernel backend (default: STREAMLP_BACKEND or auto)",
    )

    gen = p.add_argument_group("synthetic generation (--gen)")
    gen.add_argument("--classes", type=int, default=10)
    gen.add_argument("--per-class", type=int, default=100)
    gen.add_argument("--dim", type=int, default=64)
    gen.add_argument("--noise", type=float, default=None, help="default 0.3 (--gen) / 0.4 (--ablate)")
    gen.add_argument("--fewshot-per-class", type=int, default=0)
    gen.add_argument("--out-dir", help="directory for generated files")

    bench = p.add_argument_group("benchmark (--bench)")
    bench.add_argument("--bench-sizes", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    bench.add_argument("--bench-backends", action="store_true", help="also compare kernel backends")

    ab = p.add_argument_group("ablation (--ablate)")
    ab.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    return p


def _edge_config(args: argparse.Namespace) -> EdgeWeightConfig:
    text_tests = text_protos = not args.no_text_reweight
    if not args.no_text_reweight and args.text_reweight_scope != "both":
        text_tests = args.text_reweight_scope == "test"
        text_protos = args.text_reweight_scope == "proto"
    return EdgeWeightConfig(
        reweight_tests=text_tests,
        reweight_protos=text_protos,
        reweight_fewshot=not args.no_fewshot_reweight,
    )


def _load_session(args: argparse.Namespace) -> SessionData:
    sidecar = read_sidecar(args.sidecar)
    protos = normalize_rows(read_embeddings(args.prototypes), args.prototypes)
    tests = normalize_rows(read_embeddings(args.test), args.test)
    if protos.shape[0] != sidecar.n_classes:
        raise IngestError(
            f"prototype file has {protos.shape[0]} rows but sidecar names {sidecar.n_classes} classes", 8
        )
    fewshot = fewshot_labels = None
    if args.fewshot:
        fewshot = normalize_rows(read_embeddings(args.fewshot), args.fewshot)
        if sidecar.fewshot_labels is None:
            raise IngestError("few-shot file given but sidecar has no fewshot_indices", 0)
        fewshot_labels = np.asarray(sidecar.fewshot_labels, dtype=np.int64)
    labels = None if sidecar.labels is None else np.asarray(sidecar.labels, dtype=np.int64)
    return SessionData(
        prototypes=protos,
        class_names=sidecar.class_names,
        tests=tests,
        labels=labels,
        fewshot=fewshot,
        fewshot_labels=fewshot_labels,
    )


def _run_mode(args: argparse.Namespace) -> int:
    if not (args.prototypes and args.test and args.sidecar):
        print("error: --prototypes, --test and --sidecar are required for a run", file=sys.stderr)
        return EXIT_CONFIG
    hyper = HyperParams(
        k_proto=args.kp,
        k_test=args.ku,
        k_fewshot=args.kl,
        gamma=args.gamma,
        beta=args.beta,
        alpha=args.alpha,
        iters=args.iters,
    )
    config = EngineConfig(
        hyper=hyper,
        edges=_edge_config(args),
        transductive=args.transductive,
        oracle_check=args.oracle_check,
    )
    data = _load_session(args)
    echo = {"prototypes": args.prototypes, "test": args.test, "fewshot": args.fewshot, "sidecar": args.sidecar, "seed": args.seed}
    report = run_stream(data, config, echo=echo)

    total = sum(report.wall_times)
    print(f"processed {report.n_samples} samples in {total:.3f}s ({backend.active_backend()} backend)")
    if report.online_accuracy is not None:
        print(f"online accuracy:       {report.online_accuracy:.4f} ({report.online_correct}/{report.n_samples})")
    if report.transductive_accuracy is not None:
        print(f"transductive accuracy: {report.transductive_accuracy:.4f}")
    if report.baseline_accuracy is not None:
        print(f"nearest-prototype baseline: {report.baseline_accuracy:.4f}")
    if args.oracle_check:
        print("oracle check: ok")
    if args.report:
        report.write(args.report)
        print(f"report written to {args.report}")
    return EXIT_OK


def _gen_mode(args: argparse.Namespace) -> int:
    if not args.out_dir:
        print("error: --gen needs --out-dir", file=sys.stderr)
        return EXIT_CONFIG
    noise = 0.3 if args.noise is None else args.noise
    paths = generate_synthetic(
        args.classes, args.per_class, args.dim, noise, args.seed, args.out_dir, args.fewshot_per_class
    )
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def _bench_mode(args: argparse.Namespace) -> int:
    result = bench_construction(args.bench_sizes, d=args.dim, seed=args.seed)
    print(result.to_table())
    if args.bench_backends:
        totals = compare_backends(d=args.dim, seed=args.seed)
        print("\nbackend comparison (same stream):")
        for name, total in totals.items():
            print(f"  {name:>9}: {total:.4f}s")
        if "compiled" in totals and "python" in totals:
            print(f"  speedup: {totals['python'] / totals['compiled']:.2f}x")
    return EXIT_OK


def _ablate_mode(args: argparse.Namespace) -> int:
    noise = 0.4 if args.noise is None else args.noise
    rows = ablate_components(args.seeds, d=args.dim, noise=noise)
    print(components_table(rows))
    kp_choices = [1, 3, 5, 8, 10]
    ku_choices = [1, 3, 5, 8, 10]
    grid = ablate_k_sweep(kp_choices, ku_choices, seed=args.seed, d=args.dim)
    print("\nneighbor-count sweep (online accuracy):")
    print(sweep_table(grid, kp_choices, ku_choices))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        backend.use_backend(args.backend)
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.gen:
            return _gen_mode(args)
        if args.bench:
            return _bench_mode(args)
        if args.ablate:
            return _ablate_mode(args)
        return _run_mode(args)
    except IngestError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except OSError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except OracleMismatch as exc:
        print(f"oracle check failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ValueError, GeneratorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
