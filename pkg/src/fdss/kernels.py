"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``FDSS_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("FDSS_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _core as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def papr_rows(x, impl=None):
    """PAPR ratio of each row of a 2-D complex array (0 for all-zero rows)."""
    x = np.ascontiguousarray(np.atleast_2d(x), dtype=np.complex128)
    return (impl or _impl).papr_rows(x)


def smooth_auccdf(papr_db, edges, sharpness, impl=None):
    papr_db = np.ascontiguousarray(np.ravel(papr_db), dtype=np.float64)
    edges = np.ascontiguousarray(edges, dtype=np.float64)
    return float((impl or _impl).smooth_auccdf(papr_db, edges, float(sharpness)))


def exceed_counts(papr_db, edges, impl=None):
    papr_db = np.ascontiguousarray(np.ravel(papr_db), dtype=np.float64)
    edges = np.ascontiguousarray(edges, dtype=np.float64)
    return np.asarray((impl or _impl).exceed_counts(papr_db, edges))


def implementations():
    """Available backends by name, for cross-checking and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _core

        out["compiled"] = _core
    except ImportError:
        pass
    return out
