"""Kernel backend selection.

The streaming update path has three hot kernels (similarity scan, top-k
selection, bounded-degree replacement). A compiled extension implements them
for throughput; a pure-numpy module provides the same semantics when the
extension is unavailable. The compiled backend is picked at import unless
``STREAMLP_BACKEND=python`` is set. ``use_backend`` exists so benchmarks and
parity tests can switch explicitly within one process.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

_active: ModuleType = _kernels_py


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels_cy  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels_cy


def available_backends() -> list[str]:
    names = ["python"]
    if _load_compiled() is not None:
        names.append("compiled")
    return names


def use_backend(name: str) -> str:
    """Switch the active kernel backend ('python' | 'compiled' | 'auto')."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        compiled = _load_compiled()
        if compiled is None:
            raise RuntimeError("compiled kernel extension is not importable")
        _active = compiled
    elif name == "auto":
        _active = _load_compiled() or _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    return active_backend()


def active_backend() -> str:
    return _active.BACKEND_NAME


def dot_scan(mat, vec):
    return _active.dot_scan(mat, vec)


def top_k(sims, k):
    return _active.top_k(sims, k)


def replace_weakest(weights, targets, counts, sims, new_id, capacity):
    return _active.replace_weakest(weights, targets, counts, sims, new_id, capacity)


def scan_select_store(cache, vec, k, weights, targets, counts, row, base_id):
    return _active.scan_select_store(cache, vec, k, weights, targets, counts, row, base_id)


def expand_test_block(cache, raw, vec, probe, weights, targets, counts, row, base_id, k):
    return _active.expand_test_block(cache, raw, vec, probe, weights, targets, counts, row, base_id, k)


try:
    use_backend(os.environ.get("STREAMLP_BACKEND", "auto"))
except (RuntimeError, ValueError) as _exc:
    # a broken env override must not make the package unimportable
    import warnings

    warnings.warn(f"ignoring STREAMLP_BACKEND: {_exc}", RuntimeWarning)
    use_backend("auto")
