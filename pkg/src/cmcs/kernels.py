"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback in ``_kernels_py``. Set ``CMCS_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CMCS_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

random_walks = _impl.random_walks
sgns_train = _impl.sgns_train
nearest_centroid = _impl.nearest_centroid
best_swap = _impl.best_swap
best_swap_sampled = _impl.best_swap_sampled
best_subset = _impl.best_subset
anneal = _impl.anneal


def backends():
    """Map of available backend name -> module, compiled first when present."""
    out = {}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    out["python"] = _kernels_py
    return out
