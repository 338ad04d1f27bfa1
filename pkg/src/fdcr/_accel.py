"""Numba switch.

Hot kernels are written once as plain Python/numpy loops and compiled with
``numba.njit`` unless ``FDCR_DISABLE_NUMBA`` is set to a truthy value (or numba
is missing). Every kernel module also keeps a vectorised numpy twin so both
paths can be compared in tests and in ``benchmarks/bench_kernels.py``.
"""

import os

_FLAG = os.environ.get("FDCR_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba ships with the sandbox
    _numba = None

USE_NUMBA = _numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when enabled, else return it untouched."""
    if not USE_NUMBA:
        return func
    return _numba.njit(cache=True, nogil=True)(func)
