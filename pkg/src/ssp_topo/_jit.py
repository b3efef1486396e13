"""JIT switch for the numeric kernels.

Kernels are written once in a numba-compatible subset of Python. Setting
``SSP_TOPO_NO_JIT=1`` (or running without numba installed) makes ``njit`` an
identity decorator, so the same source runs as plain numpy/Python code.
"""
from __future__ import annotations

import functools
import os

_DISABLED = os.environ.get("SSP_TOPO_NO_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba

    USE_NUMBA = True
except ImportError:
    _numba = None
    USE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` or a pass-through, depending on ``USE_NUMBA``."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def deco(f):
        return functools.wraps(f)(f)

    return deco


__all__ = ["njit", "USE_NUMBA"]
