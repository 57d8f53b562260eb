"""Hot kernels: compiled Cython core with a pure-Python fallback.

The compiled module is used when it imports; set ``NBEXT_PURE_PYTHON=1`` to
force the fallback. Both produce identical results for identical inputs.
"""

from __future__ import annotations

import os

from . import pykernel

BACKEND = "python"
kernel = pykernel

if not os.environ.get("NBEXT_PURE_PYTHON"):
    try:
        from . import ckernel as kernel  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        kernel = pykernel

__all__ = ["BACKEND", "kernel", "pykernel"]
