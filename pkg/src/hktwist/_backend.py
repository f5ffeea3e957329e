"""Kernel backend selection: numba-jitted kernels with a pure-numpy fallback.

The backend is chosen once at import time from the HKTWIST_BACKEND environment
variable ("numba" or "numpy"). Default is numba when importable. `hktwist bench`
compares the two.
"""

import os

_requested = os.environ.get("HKTWIST_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ValueError(f"HKTWIST_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

USE_NUMBA = _requested != "numpy"
if USE_NUMBA:
    try:
        from numba import njit as _numba_njit
    except ImportError:
        if _requested == "numba":
            raise
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """@njit that compiles under the numba backend and is a no-op otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(fn):
        return fn

    return deco
