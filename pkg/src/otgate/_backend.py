"""Pick the compiled kernels when they import, else the pure-Python ones.

Set ``OTGATE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

try:
    if os.environ.get("OTGATE_PURE_PYTHON", "").strip() not in ("", "0"):
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _impl
except ImportError:
    _impl = _fallback
    BACKEND = "python"
else:
    BACKEND = "cython"

transport_simplex = _impl.transport_simplex
hungarian = _impl.hungarian
linkage = _impl.linkage

SINGLE, COMPLETE, AVERAGE = _fallback.SINGLE, _fallback.COMPLETE, _fallback.AVERAGE


def available_backends():
    """Map backend name -> kernel module for every backend that imports."""
    found = {"python": _fallback}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
