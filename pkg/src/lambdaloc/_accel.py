"""Numba switch.

Hot kernels are written once as plain Python loops over numpy arrays. When
numba is importable and ``LAMBDALOC_NO_NUMBA`` is unset (or ``0``), they are
compiled with ``numba.njit``; otherwise the package falls back to vectorised
numpy implementations registered next to each kernel.
"""

import os

_flag = os.environ.get("LAMBDALOC_NO_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when acceleration is on, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, cache=True, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
