"""Kernel compilation switch.

Hot kernels are written once in numba-compatible numpy. ``PBDREM_BACKEND``
picks how they run:

* ``numba`` (default): compiled with ``numba.njit``; falls back to ``numpy``
  with a warning if numba cannot be imported.
* ``numpy``: executed as plain Python/numpy, no compilation.
"""
import os
import warnings

BACKEND_ENV = "PBDREM_BACKEND"

_requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = _requested
if BACKEND == "numba":
    try:
        import numba
    except ImportError:  # pragma: no cover - depends on environment
        warnings.warn("numba not importable; running kernels with numpy", RuntimeWarning)
        BACKEND = "numpy"


def kernel(func):
    """Compile ``func`` with numba when the numba backend is active."""
    if BACKEND == "numba":
        return numba.njit(cache=True)(func)
    return func
