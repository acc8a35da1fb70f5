"""Backend selection for the hot kernels.

The compiled Cython module is preferred. Setting ``QA_ARCHETYPES_PURE_PYTHON=1``
forces the NumPy fallback, which is also used when the extension was not built.
"""
import os

from . import _pykernels

if os.environ.get("QA_ARCHETYPES_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

series_features = _impl.series_features
assign_nearest = _impl.assign_nearest
silhouette_weighted = _impl.silhouette_weighted
