"""Optional numba acceleration.

All hot loops are written as plain Python functions and compiled with
``numba.njit`` when numba is importable. Without numba the same functions
run uncompiled, so results are identical either way -- only speed changes.
"""

from __future__ import annotations

try:
    from numba import njit as _numba_njit

    NUMBA_AVAILABLE = True

    def njit(func):
        return _numba_njit(cache=True, nogil=True)(func)

except ImportError:  # pragma: no cover - numba is a declared dependency

    NUMBA_AVAILABLE = False

    def njit(func):
        return func
