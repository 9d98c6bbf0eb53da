"""Optional numba acceleration.

Set ``INFOCOST_DISABLE_NUMBA=1`` before import to force the pure-numpy
code paths.  Kernels decorated with :func:`njit` fall back to plain Python
functions when numba is unavailable or disabled.
"""

import os

_DISABLED = os.environ.get("INFOCOST_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAVE_NUMBA:
        return numba.njit(*args, cache=True, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
