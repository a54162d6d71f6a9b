"""Bit-exact embedding file format and the label sidecar.

Layout of an embedding file:

    bytes 0..3    magic "ECLP"
    bytes 4..7    format version, u32 little-endian (currently 1)
    bytes 8..11   row count, u32 LE
    bytes 12..15  dimension, u32 LE
    bytes 16..    count * dim IEEE-754 float32 LE, row-major

Rows are stored exactly as given (no normalization on write); ingestion into
a session normalizes to float64 unit vectors and rejects zero rows. The
sidecar is a JSON document with class names, optional ground-truth labels
and optional few-shot class assignments.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

MAGIC = b"ECLP"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class IngestError(ValueError):
    """A malformed input file; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def write_embeddings(path: str | Path, rows: np.ndarray) -> None:
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D array of row vectors")
    count, dim = rows.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, count, dim))
        fh.write(np.ascontiguousarray(rows).tobytes())


def read_embeddings(path: str | Path) -> np.ndarray:
    """Raw float32 payload, bit-identical to what was written."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise IngestError("file too short for header", len(blob))
    magic, version, count, dim = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise IngestError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise IngestError(f"unsupported version {version}", 4)
    if dim == 0:
        raise IngestError("zero dimension", 12)
    expected = count * dim * 4
    if len(blob) - _HEADER.size != expected:
        raise IngestError(
            f"payload is {len(blob) - _HEADER.size} bytes, header promises {expected}",
            min(len(blob), _HEADER.size + expected),
        )
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    return data.reshape(count, dim).copy()


def normalize_rows(raw: np.ndarray, path: str | Path = "<memory>") -> np.ndarray:
    """Float64 unit-normalized session vectors; zero rows are ingest errors."""
    mat = np.ascontiguousarray(raw, dtype=np.float64)
    norms = np.sqrt(np.sum(mat * mat, axis=1))
    bad = np.nonzero(~(norms > 0) | ~np.isfinite(norms))[0]
    if bad.size:
        row = int(bad[0])
        raise IngestError(f"row {row} of {path} has zero or non-finite norm", _HEADER.size + row * mat.shape[1] * 4)
    return mat / norms[:, None]


@dataclass
class LabelSidecar:
    class_names: list[str]
    labels: Optional[list[int]] = None
    fewshot_labels: Optional[list[int]] = None

    def __post_init__(self) -> None:
        if not self.class_names:
            raise ValueError("class_names must be non-empty")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class_names must be unique")
        c = len(self.class_names)
        for name, values in (("labels", self.labels), ("fewshot_indices", self.fewshot_labels)):
            if values is not None and any(not 0 <= v < c for v in values):
                raise ValueError(f"{name} entries must lie in [0, {c})")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def write_sidecar(path: str | Path, sidecar: LabelSidecar) -> None:
    doc = {"class_names": sidecar.class_names}
    if sidecar.labels is not None:
        doc["labels"] = list(map(int, sidecar.labels))
    if sidecar.fewshot_labels is not None:
        doc["fewshot_indices"] = list(map(int, sidecar.fewshot_labels))
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_sidecar(path: str | Path) -> LabelSidecar:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise IngestError(f"sidecar is not valid JSON: {exc}", exc.pos) from exc
    if "class_names" not in doc:
        raise IngestError("sidecar missing class_names", 0)
    try:
        return LabelSidecar(
            class_names=list(doc["class_names"]),
            labels=doc.get("labels"),
            fewshot_labels=doc.get("fewshot_indices"),
        )
    except ValueError as exc:
        raise IngestError(str(exc), 0) from exc
