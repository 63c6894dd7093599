"""JIT switch for the numeric kernels.

Kernels are written twice: a loop form compiled with numba's ``njit`` and a
vectorised numpy form. ``USE_JIT`` picks which one the public functions call.
Set ``PRODSEARCH_DISABLE_JIT=1`` to force the numpy path (numba is then never
imported).
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("PRODSEARCH_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

HAS_NUMBA = False
if not _DISABLED:
    try:
        import numba  # noqa: F401

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False

USE_JIT = HAS_NUMBA and not _DISABLED


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    The decorated loop kernels still run (slowly) as plain Python without numba,
    which is what the equivalence tests rely on when JIT is disabled.
    """
    if not HAS_NUMBA:
        return func
    import numba

    return numba.njit(cache=True, nogil=True)(func)


def njit_parallel(func):
    """Like :func:`njit` but with ``parallel=True`` so ``prange`` loops fan out."""
    if not HAS_NUMBA:
        return func
    import numba

    return numba.njit(cache=True, nogil=True, parallel=True)(func)


if HAS_NUMBA:
    from numba import prange
else:
    prange = range


def backend() -> str:
    return "numba" if USE_JIT else "numpy"
