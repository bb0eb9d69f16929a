"""Backend selection for the hot sampling loops.

The inner Metropolis/exchange loops in ``semc._loops`` are written in a
numba-compatible subset of Python.  By default they are compiled with
``numba.njit``; setting ``SEMC_BACKEND=numpy`` runs the same source
uncompiled (slow, but dependency-light and useful for debugging).

Both backends draw from ``numpy.random.Generator`` objects and numba's
generator implementation is bit-compatible with NumPy's, so a run is
reproducible for a fixed seed on either backend.
"""

import os

_ENV_VAR = "SEMC_BACKEND"
_choice = os.environ.get(_ENV_VAR, "").strip().lower()

if _choice not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"{_ENV_VAR} must be 'numba' or 'numpy', got {_choice!r}"
    )

if _choice == "numpy":
    USING_NUMBA = False
else:
    try:
        from numba import njit as _njit

        USING_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        USING_NUMBA = False

BACKEND = "numba" if USING_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it unchanged."""
    if USING_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn
