"""Backend selection for the Sinkhorn iteration core.

The compiled Cython kernel is preferred when present; the pure-NumPy
fallback implements the identical algorithm. ``INFOOT_BACKEND`` forces a
choice (``compiled`` or ``python``), mainly for benchmarking.
"""

import os

from ._sinkhorn_py import sinkhorn_log_kernel as _py_kernel

try:
    from ._sinkhorn_ext import sinkhorn_log_kernel as _ext_kernel
except ImportError:
    _ext_kernel = None

_forced = os.environ.get("INFOOT_BACKEND", "").strip().lower()
if _forced and _forced not in ("python", "compiled"):
    raise ImportError(f"INFOOT_BACKEND must be 'compiled' or 'python', "
                      f"got {_forced!r}")
if _forced == "python":
    BACKEND = "python"
    sinkhorn_log_kernel = _py_kernel
elif _forced == "compiled":
    if _ext_kernel is None:
        raise ImportError("INFOOT_BACKEND=compiled but the extension is not built")
    BACKEND = "compiled"
    sinkhorn_log_kernel = _ext_kernel
elif _ext_kernel is not None:
    BACKEND = "compiled"
    sinkhorn_log_kernel = _ext_kernel
else:
    BACKEND = "python"
    sinkhorn_log_kernel = _py_kernel


def available_backends() -> dict:
    """Map of backend name to kernel for every backend that imports."""
    out = {"python": _py_kernel}
    if _ext_kernel is not None:
        out["compiled"] = _ext_kernel
    return out
