"""Kernel backend selection.

The compiled extension is used when it was built and ``RLTBD_PURE_PYTHON`` is
unset or ``0``; otherwise the numpy fallback is loaded. ``BACKEND`` names the
active implementation.
"""
import os

from . import _kernels_py

if os.environ.get("RLTBD_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

mismatch = _impl.mismatch
mismatch_many = _impl.mismatch_many
polar_score = _impl.polar_score


def available_backends():
    """Map backend name to module for every implementation importable here."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
