"""Counter-based random streams usable inside numba kernels.

A stream is a one-element ``uint64`` array advanced with splitmix64.
Streams derived from ``(seed, a, b)`` are independent of scheduling
order, which keeps parallel kernels deterministic.
"""

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def derive(seed, a, b):
    """Seed value for the stream identified by ``(seed, a, b)``."""
    z = mix64(np.uint64(seed) + _GAMMA)
    z = mix64(z ^ (np.uint64(a) + _GAMMA))
    z = mix64(z ^ (np.uint64(b) * _GAMMA + _GAMMA))
    return z


@njit(cache=True)
def new_stream(seed, a, b):
    state = np.empty(1, dtype=np.uint64)
    state[0] = derive(seed, a, b)
    return state


@njit(cache=True, inline="always")
def next_u64(state):
    state[0] = state[0] + _GAMMA
    return mix64(state[0])


@njit(cache=True, inline="always")
def uniform(state):
    """Float in [0, 1) with 53 random bits."""
    return np.float64(next_u64(state) >> _S11) * _INV53


@njit(cache=True, inline="always")
def randbelow(state, n):
    k = np.int64(uniform(state) * n)
    return k if k < n else n - 1


def as_seed(seed) -> int:
    """Normalize a user seed to an unsigned 64-bit integer."""
    if seed is None:
        return 0
    seed = int(seed)
    return seed & 0xFFFFFFFFFFFFFFFF
