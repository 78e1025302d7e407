"""Kernel backend selection.

Prefers the compiled Cython extension when it imported cleanly; falls
back to the pure-numpy kernels otherwise. Set SALIENTLIGHTS_BACKEND to
"python" or "cython" to force a choice ("cython" raises if the
extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("SALIENTLIGHTS_BACKEND", "").strip().lower()

if _choice == "python":
    _impl = _kernels_py
elif _choice == "cython":
    from . import _kernels as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
pairwise_iou = _impl.pairwise_iou
focal_terms = _impl.focal_terms
greedy_assign = _impl.greedy_assign

__all__ = ["BACKEND", "pairwise_iou", "focal_terms", "greedy_assign"]
