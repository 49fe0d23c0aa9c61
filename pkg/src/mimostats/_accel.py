"""Backend selection for the compiled kernels.

Kernels are compiled with numba when it is importable. Setting the
environment variable ``MIMOSTATS_BACKEND=numpy`` forces the pure-numpy
implementations, which is useful for debugging and for benchmarking the
two paths against each other.
"""

from __future__ import annotations

import os

try:  # pragma: no cover - exercised implicitly
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

BACKEND_ENV = "MIMOSTATS_BACKEND"

HAVE_NUMBA = _numba is not None


def default_backend() -> str:
    """Return ``"numba"`` or ``"numpy"`` according to the environment."""
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    return _numba.njit(*args, **kwargs)
