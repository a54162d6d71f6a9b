"""Seeded synthetic manifolds for desk-scale verification.

Class means are drawn uniformly on the unit sphere of a signal subspace
(the first ``signal_dims`` axes), rejection-sampled until every pair is at
least 30 degrees apart. The remaining axes are pure nuisance: encoder-style
features where only some dimensions carry class structure, which is what
the variance-based edge re-weighting exploits. Each sample is its class
mean plus isotropic Gaussian noise over all dimensions (per-dimension std
``4 * noise / sqrt(d)``, calibrated so noise around 0.4 puts the plain
nearest-prototype baseline near 75%), then re-normalized; noise=0
reproduces the means exactly. Prototypes get one independent draw per
class, few-shot samples additional labeled draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .io import LabelSidecar, write_embeddings, write_sidecar

MIN_ANGLE_DEG = 30.0


class GeneratorError(RuntimeError):
    """Could not place class means under the pairwise angle constraint."""


@dataclass
class SyntheticDataset:
    means: np.ndarray
    prototypes: np.ndarray  # float32, one row per class
    tests: np.ndarray  # float32
    labels: np.ndarray  # int64, per test row
    fewshot: Optional[np.ndarray]  # float32 or None
    fewshot_labels: Optional[np.ndarray]
    sidecar: LabelSidecar


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _draw_means(C: int, d: int, signal_dims: int, rng: np.random.Generator) -> np.ndarray:
    max_cos = np.cos(np.deg2rad(MIN_ANGLE_DEG))
    means: list[np.ndarray] = []
    rejections = 0
    while len(means) < C:
        cand = np.zeros(d)
        cand[:signal_dims] = _unit(rng.standard_normal(signal_dims))
        if all(float(np.dot(cand, m)) <= max_cos for m in means):
            means.append(cand)
            continue
        rejections += 1
        if rejections >= 10 * C:
            raise GeneratorError(
                f"couldn't place {C} means at >= {MIN_ANGLE_DEG} deg separation in {signal_dims} signal dims "
                f"after {rejections} rejections"
            )
    return np.stack(means)


def _noisy(means: np.ndarray, labels: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    d = means.shape[1]
    pts = means[labels] + (4.0 * noise / np.sqrt(d)) * rng.standard_normal((labels.shape[0], d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return pts


def make_synthetic(
    C: int,
    per_class: int,
    d: int,
    noise: float,
    seed: int,
    fewshot_per_class: int = 0,
    signal_dims: Optional[int] = None,
) -> SyntheticDataset:
    """Build the dataset in memory. Fully determined by the arguments."""
    if C < 2:
        raise ValueError("need at least 2 classes")
    if d < 2:
        raise ValueError("need at least 2 dimensions")
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    if signal_dims is None:
        signal_dims = max(2, d // 2)
    if not 2 <= signal_dims <= d:
        raise ValueError("signal_dims must lie in [2, d]")
    rng = np.random.default_rng(seed)
    means = _draw_means(C, d, signal_dims, rng)

    protos = _noisy(means, np.arange(C), noise, rng)

    test_labels = np.repeat(np.arange(C), per_class)
    order = rng.permutation(test_labels.shape[0])
    test_labels = test_labels[order]
    tests = _noisy(means, test_labels, noise, rng)

    fewshot = fewshot_labels = None
    if fewshot_per_class > 0:
        fewshot_labels = np.repeat(np.arange(C), fewshot_per_class)
        fewshot = _noisy(means, fewshot_labels, noise, rng)

    sidecar = LabelSidecar(
        class_names=[f"class_{c:03d}" for c in range(C)],
        labels=[int(x) for x in test_labels],
        fewshot_labels=None if fewshot_labels is None else [int(x) for x in fewshot_labels],
    )
    return SyntheticDataset(
        means=means,
        prototypes=protos.astype(np.float32),
        tests=tests.astype(np.float32),
        labels=test_labels.astype(np.int64),
        fewshot=None if fewshot is None else fewshot.astype(np.float32),
        fewshot_labels=None if fewshot_labels is None else fewshot_labels.astype(np.int64),
        sidecar=sidecar,
    )


def generate_synthetic(
    C: int,
    per_class: int,
    d: int,
    noise: float,
    seed: int,
    out_dir: str | Path,
    fewshot_per_class: int = 0,
) -> dict[str, Path]:
    """Write prototype/test(/few-shot) embedding files plus the sidecar."""
    ds = make_synthetic(C, per_class, d, noise, seed, fewshot_per_class)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "prototypes": out / "prototypes.eclp",
        "test": out / "test.eclp",
        "sidecar": out / "sidecar.json",
    }
    write_embeddings(paths["prototypes"], ds.prototypes)
    write_embeddings(paths["test"], ds.tests)
    if ds.fewshot is not None:
        paths["fewshot"] = out / "fewshot.eclp"
        write_embeddings(paths["fewshot"], ds.fewshot)
    write_sidecar(paths["sidecar"], ds.sidecar)
    return paths
