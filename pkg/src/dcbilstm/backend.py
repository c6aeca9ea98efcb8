"""Kernel backend selection.

Hot sequence kernels are written once as plain numpy functions and, when
numba is available, compiled with ``@njit``.  The active path is chosen at
import time from the ``DCBILSTM_BACKEND`` environment variable:

    DCBILSTM_BACKEND=numba   force the jitted kernels (error if numba missing)
    DCBILSTM_BACKEND=numpy   force the pure-numpy fallback
    unset / auto             numba if importable, else numpy

Both paths compute the same recurrences; ``benchmarks/bench_kernels.py``
times them against each other and checks agreement.
"""

import os

_CHOICE = os.environ.get("DCBILSTM_BACKEND", "auto").strip().lower()
if _CHOICE not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"DCBILSTM_BACKEND must be auto, numba or numpy, got {_CHOICE!r}")

if _CHOICE == "numpy":
    HAVE_NUMBA = False
    njit = None
else:
    try:
        from numba import njit
        HAVE_NUMBA = True
    except ImportError:
        if _CHOICE == "numba":
            raise
        HAVE_NUMBA = False
        njit = None

USE_NUMBA = HAVE_NUMBA and _CHOICE in ("auto", "numba")


def active_backend():
    """Name of the kernel path in use, for logs and reports."""
    return "numba" if USE_NUMBA else "numpy"


def jit_compile(fn):
    """Return the jitted version of ``fn`` on the numba path, else ``fn`` itself."""
    if USE_NUMBA:
        return njit(cache=True)(fn)
    return fn
