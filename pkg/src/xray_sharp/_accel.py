"""Backend selection for the compiled kernels.

The numba path is used when numba imports cleanly and the environment
variable ``XRAY_SHARP_NUMBA`` is not set to ``0``. Otherwise every kernel
falls back to a vectorized numpy implementation with identical semantics.
"""

from __future__ import annotations

import os

# the default layer probes for TBB and warns when its version is too old
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def numba_requested() -> bool:
    return os.environ.get("XRAY_SHARP_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and numba_requested()


def set_threads(n: int | None) -> int:
    """Set the number of worker threads used by the compiled kernels.

    Parameters
    ----------
    n : int or None
        Requested thread count. ``None`` reads ``XRAY_SHARP_THREADS`` and
        leaves the numba default when that is unset.

    Returns
    -------
    int
        The thread count in effect afterwards (1 on the numpy path).
    """
    if n is None:
        env = os.environ.get("XRAY_SHARP_THREADS")
        n = int(env) if env else None
    if not USE_NUMBA:
        return 1
    if n is not None:
        if n < 1:
            raise ValueError("thread count must be positive")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
