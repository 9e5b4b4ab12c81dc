"""Backend selection for the numeric kernels.

Kernels are always compiled with numba when it is importable so that both
paths can be benchmarked side by side; ``CDRUM_DISABLE_NUMBA=1`` only changes
which implementation the public dispatchers in :mod:`cdrum.kernels` call.
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSE = {"", "0", "false", "no", "off"}

DISABLED_BY_ENV = os.environ.get("CDRUM_DISABLE_NUMBA", "").strip().lower() not in _FALSE
NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV


def njit(fn=None, **kwargs):
    """``numba.njit(cache=True)`` or the identity when numba is missing."""
    if fn is None:
        return lambda f: njit(f, **kwargs)
    if numba is None:
        return fn
    kwargs.setdefault("cache", True)
    return numba.njit(**kwargs)(fn)


def set_threads(n: int | None) -> None:
    if n is None or numba is None:
        return
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
