"""Kernel backend selection.

The compiled extension (ricdiag._kernels) is preferred when it imported
successfully; otherwise the pure-numpy fallback is used. RIC_DIAG_BACKEND
forces one explicitly ("compiled" or "pure"), which the backend benchmark
relies on. Both backends are label-for-label identical, so the choice only
affects speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:
    _kernels = None

_FORCED = os.environ.get("RIC_DIAG_BACKEND", "").strip().lower()


def get_backend(name: str | None = None):
    """Return a kernel module by name, or the default selection."""
    if name is None:
        name = _FORCED or ("compiled" if _kernels is not None else "pure")
    if name == "compiled":
        if _kernels is None:
            raise RuntimeError("compiled kernels are not available in this install")
        return _kernels
    if name == "pure":
        return _kernels_py
    raise ValueError(f"unknown backend {name!r} (expected 'compiled' or 'pure')")


def available_backends() -> tuple[str, ...]:
    return ("compiled", "pure") if _kernels is not None else ("pure",)


_active = get_backend()
BACKEND_NAME = "compiled" if _active is _kernels and _kernels is not None else "pure"

dbscan_labels = _active.dbscan_labels
assign_nearest = _active.assign_nearest
