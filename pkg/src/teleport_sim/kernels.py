"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``TELEPORT_SIM_PURE=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("TELEPORT_SIM_PURE", "") in ("", "0"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:
        _compiled = None
    else:
        BACKEND = "cython"
else:
    _compiled = None

if _compiled is not None:
    displacement_stack = _compiled.displacement_stack
    char_stack = _compiled.char_stack
else:
    displacement_stack = _kernels_py.displacement_stack
    char_stack = _kernels_py.char_stack

__all__ = ["BACKEND", "displacement_stack", "char_stack"]
