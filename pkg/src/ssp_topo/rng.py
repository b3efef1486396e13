"""SplitMix64 pseudo-random stream shared by generators and sampled solvers.

The generator state is a single unsigned 64-bit word held in a length-1
``uint64`` array so kernels can advance it in place. One step is::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

with all arithmetic modulo 2**64. Derived draws:

* ``rand_below(state, n)`` is ``out % n``.
* ``rand_unit(state)`` is ``(out >> 11) * 2**-53``, a double in ``[0, 1)``.

These definitions are frozen; generated instances depend on them bit for bit.
"""
from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def make_state(seed: int) -> np.ndarray:
    """Fresh stream state for an integer seed (reduced mod 2**64)."""
    return np.array([int(seed) & _MASK], dtype=np.uint64)


if USE_NUMBA:

    @njit
    def next_u64(state):
        x = state[0] + np.uint64(GOLDEN)
        state[0] = x
        z = x
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        return z ^ (z >> np.uint64(31))

    @njit
    def rand_below(state, n):
        return np.int64(next_u64(state) % np.uint64(n))

    @njit
    def rand_unit(state):
        return np.float64(next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)

else:

    def next_u64(state):
        x = (int(state[0]) + GOLDEN) & _MASK
        state[0] = x
        z = x
        z = ((z ^ (z >> 30)) * MIX1) & _MASK
        z = ((z ^ (z >> 27)) * MIX2) & _MASK
        return z ^ (z >> 31)

    def rand_below(state, n):
        return next_u64(state) % int(n)

    def rand_unit(state):
        return float(next_u64(state) >> 11) * (1.0 / 9007199254740992.0)


__all__ = ["make_state", "next_u64", "rand_below", "rand_unit"]
