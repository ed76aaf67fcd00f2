"""Backend selection for the hot numeric kernels.

Every kernel in :mod:`hypkern._kernels` exists twice: a loop version compiled
with numba and a vectorised numpy version. ``HYPKERN_DISABLE_NUMBA=1`` (or a
missing numba install) selects the numpy path at import time.
"""
import os

_FLAG = os.environ.get("HYPKERN_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is usable, otherwise a no-op decorator."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
