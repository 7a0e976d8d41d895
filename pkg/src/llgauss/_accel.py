"""Numba switch.

Set ``LLGAUSS_DISABLE_NUMBA=1`` before import to run every hot kernel through
its pure-numpy twin. The flag is read once, at import time.
"""

import os

_flag = os.environ.get("LLGAUSS_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
if HAVE_NUMBA and "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often older than numba wants; workqueue always works
    numba.config.THREADING_LAYER = "workqueue"
USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    The decorated object is always compiled when numba exists, even with the
    env flag set, so that benchmarks can compare both paths in one process.
    Dispatch between the two paths happens in :mod:`llgauss._kernels`.
    """
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def set_threads(n: int | None) -> None:
    if n and HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
