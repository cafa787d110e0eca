"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
implementations are used.  Setting ``DFBIN_PURE_PYTHON=1`` forces the
fallback.
"""

import os

from . import _kernels_py

if os.environ.get("DFBIN_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
ell_array = _impl.ell_array
knn_mean = _impl.knn_mean
grid_search_allocation = _impl.grid_search_allocation

__all__ = ["BACKEND", "ell_array", "knn_mean", "grid_search_allocation"]
