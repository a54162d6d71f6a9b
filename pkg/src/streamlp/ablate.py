"""Ablation harness: component on/off matrix and the neighbor-count sweep."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .engine import EngineConfig, SessionData, run_stream
from .graph import EdgeWeightConfig
from .model import HyperParams
from .synthetic import make_synthetic


@dataclass
class AblationRow:
    name: str
    fewshot: bool
    text_reweight: bool
    fewshot_reweight: bool
    accuracies: list[float]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))


def _session(ds, with_fewshot: bool) -> SessionData:
    from .io import normalize_rows

    return SessionData(
        prototypes=normalize_rows(ds.prototypes),
        class_names=ds.sidecar.class_names,
        tests=normalize_rows(ds.tests),
        labels=ds.labels,
        fewshot=normalize_rows(ds.fewshot) if with_fewshot and ds.fewshot is not None else None,
        fewshot_labels=ds.fewshot_labels if with_fewshot and ds.fewshot is not None else None,
    )


COMPONENT_GRID = [
    # name, fewshot, text reweight, few-shot reweight
    ("lp_plain", False, False, False),
    ("lp_text_reweight", False, True, False),
    ("fs_plain", True, False, False),
    ("fs_reweight", True, False, True),
    ("fs_full", True, True, True),
]


def ablate_components(
    seeds: list[int],
    C: int = 10,
    per_class: int = 100,
    d: int = 64,
    noise: float = 0.4,
    fewshot_per_class: int = 4,
    hyper: HyperParams = HyperParams(),
) -> list[AblationRow]:
    """Run the component on/off matrix over seeded synthetic manifolds."""
    rows = [AblationRow(name, fs, text, fsw, []) for name, fs, text, fsw in COMPONENT_GRID]
    for seed in seeds:
        ds = make_synthetic(C, per_class, d, noise, seed, fewshot_per_class)
        for spec_row in rows:
            config = EngineConfig(
                hyper=hyper,
                edges=EdgeWeightConfig(
                    reweight_tests=spec_row.text_reweight,
                    reweight_protos=spec_row.text_reweight,
                    reweight_fewshot=spec_row.fewshot_reweight,
                ),
            )
            report = run_stream(_session(ds, spec_row.fewshot), config)
            spec_row.accuracies.append(report.online_accuracy)
    return rows


def ablate_k_sweep(
    kp_choices: list[int] = [1, 3, 5, 8, 10],
    ku_choices: list[int] = [1, 3, 5, 8, 10],
    seed: int = 0,
    C: int = 10,
    per_class: int = 60,
    d: int = 64,
    noise: float = 0.4,
) -> dict[tuple[int, int], float]:
    """Zero-shot accuracy over the neighbor-count grid."""
    ds = make_synthetic(C, per_class, d, noise, seed)
    session = _session(ds, with_fewshot=False)
    out: dict[tuple[int, int], float] = {}
    for kp in kp_choices:
        for ku in ku_choices:
            hyper = replace(HyperParams(), k_proto=kp, k_test=ku)
            report = run_stream(session, EngineConfig(hyper=hyper))
            out[(kp, ku)] = report.online_accuracy
    return out


def components_table(rows: list[AblationRow]) -> str:
    lines = [f"{'config':<20} {'few-shot':>8} {'text rw':>8} {'fs rw':>6} {'mean acc':>9}"]
    for r in rows:
        lines.append(
            f"{r.name:<20} {str(r.fewshot):>8} {str(r.text_reweight):>8} {str(r.fewshot_reweight):>6} {r.mean_accuracy:>9.4f}"
        )
    return "\n".join(lines)


def sweep_table(grid: dict[tuple[int, int], float], kp_choices: list[int], ku_choices: list[int]) -> str:
    header = "kp \\ ku " + " ".join(f"{ku:>7}" for ku in ku_choices)
    lines = [header]
    for kp in kp_choices:
        cells = " ".join(f"{grid[(kp, ku)]:>7.4f}" for ku in ku_choices)
        lines.append(f"{kp:>7} {cells}")
    return "\n".join(lines)
