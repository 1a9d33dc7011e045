"""Selects the compiled inference kernels when available.

Set ``MCSP_PURE_PYTHON=1`` to force the NumPy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("MCSP_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_c as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"
infer = _impl.infer
infer_batch = _impl.infer_batch
UNDERFLOW = _kernels_py.UNDERFLOW

__all__ = ["BACKEND", "infer", "infer_batch", "UNDERFLOW"]
