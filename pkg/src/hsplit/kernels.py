"""Backend selection for the geometry kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``HS_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the pure-Python module is used.
"""
import os

from . import _kernels_py

if os.environ.get("HS_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

euclid_dist = _impl.euclid_dist
poincare_dist = _impl.poincare_dist
mobius_add = _impl.mobius_add
poincare_geodesic = _impl.poincare_geodesic
pairwise_sq_euclid = _impl.pairwise_sq_euclid
pairwise_sq_poincare = _impl.pairwise_sq_poincare
tree_dist = _impl.tree_dist
pairwise_sq_tree = _impl.pairwise_sq_tree

__all__ = [
    "BACKEND",
    "euclid_dist",
    "poincare_dist",
    "mobius_add",
    "poincare_geodesic",
    "pairwise_sq_euclid",
    "pairwise_sq_poincare",
    "tree_dist",
    "pairwise_sq_tree",
]
