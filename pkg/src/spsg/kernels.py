"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported. Setting ``SPSG_PURE_PYTHON=1`` forces the fallback.
"""

import os

from spsg import _fallback

try:
    if os.environ.get("SPSG_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernels disabled by SPSG_PURE_PYTHON")
    from spsg import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

project_simplex_columns = _impl.project_simplex_columns
window_histograms = _impl.window_histograms
slic_assign = _impl.slic_assign

__all__ = ["BACKEND", "project_simplex_columns", "window_histograms", "slic_assign"]
