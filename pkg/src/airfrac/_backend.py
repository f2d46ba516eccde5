"""Pick the Kalman kernel implementation at import time.

The compiled extension is used when it was built; setting
``AIRFRAC_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import os

if os.environ.get("AIRFRAC_PURE_PYTHON", "") not in ("", "0"):
    from . import _kalman_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kalman as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _kalman_py as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
