"""Backend selection for the hot numeric kernels.

The same kernel set exists twice: a numba-JIT version (fast loop nests,
im2col convolution feeding BLAS) and a pure-numpy fallback.  By default the
numba backend is used whenever numba imports cleanly; set the environment
variable ``EMSA_NO_NUMBA=1`` to force the numpy path, e.g. on platforms
where JIT compilation is unavailable or unwanted.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

_flag = os.environ.get("EMSA_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag in ("1", "true", "yes", "on")

USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return "numba" if USE_NUMBA else "numpy"
