"""Kernel backend selection.

The compute-heavy inner loops (ADMM iterations, coordinate-descent sweeps)
exist in two interchangeable implementations: numba-compiled and pure numpy.
The active one is picked once, at import time, from the ``MDDL_BACKEND``
environment variable:

    MDDL_BACKEND=numba    force the compiled kernels (error if numba missing)
    MDDL_BACKEND=numpy    force the pure-numpy fallback
    unset or "auto"       numba when importable, numpy otherwise

Both implementations stay importable regardless of the selection, so tests
and the backend-comparison benchmark can exercise them side by side.
"""

import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

_requested = os.environ.get("MDDL_BACKEND", "auto").strip().lower()

if _requested == "numba":
    if not NUMBA_AVAILABLE:
        raise ImportError("MDDL_BACKEND=numba was requested but numba is not installed")
    USE_NUMBA = True
elif _requested == "numpy":
    USE_NUMBA = False
elif _requested in ("", "auto"):
    USE_NUMBA = NUMBA_AVAILABLE
else:
    raise ValueError(
        f"unrecognized MDDL_BACKEND={_requested!r}; expected 'numba', 'numpy' or 'auto'"
    )

ACTIVE_BACKEND = "numba" if USE_NUMBA else "numpy"
