"""Kernel selection: compiled extension when available, numpy otherwise.

Set ``SUBSETVI_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _lpcore_py

BACKEND = "python"
_impl = _lpcore_py

if os.environ.get("SUBSETVI_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _lpcore as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

OPTIMAL = _lpcore_py.OPTIMAL
INFEASIBLE = _lpcore_py.INFEASIBLE
UNBOUNDED = _lpcore_py.UNBOUNDED
ITERATION_LIMIT = _lpcore_py.ITERATION_LIMIT

simplex_max = _impl.simplex_max
dominated_mask = _impl.dominated_mask


def backends():
    """Map backend name to kernel module for every backend importable here."""
    out = {"python": _lpcore_py}
    try:
        from . import _lpcore
        out["cython"] = _lpcore
    except ImportError:
        pass
    return out
