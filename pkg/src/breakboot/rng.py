"""Reproducible random streams.

Every random quantity in the package is drawn from a ``numpy`` PCG64
generator whose seed is derived from a master seed and a tuple of integer
labels (replication index, purpose tag, bootstrap index, ...).  The
derivation rule is fixed bit-exactly so that external scripts can replay
any stream:

    state = splitmix64(master & 2**64-1)
    for part in parts:
        state = splitmix64(state XOR splitmix64(part & 2**64-1))
    seed  = state

where ``splitmix64`` is the standard SplitMix64 output function

    x = (x + 0x9E3779B97F4A7C15) mod 2**64
    z = x
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    z = z XOR (z >> 31)

The purpose tags below keep the innovation streams of a Monte Carlo
replication independent of each other and, crucially, independent of the
break-shift magnitude ``g`` so that experiments under the null and the
alternative share random numbers.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Stream purpose tags (documented, fixed).
STREAM_UV = 1       # structural / reduced-form error innovations
STREAM_R = 2        # contemporaneously exogenous regressor innovations
STREAM_NU = 3       # wild bootstrap multipliers, structural-equation tests
STREAM_NU_RF = 4    # wild bootstrap multipliers, reduced-form pre-tests


def splitmix64(x: int) -> int:
    """One SplitMix64 output step on a 64-bit state."""
    x = (x + _GOLDEN) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Derive a 64-bit child seed from a master seed and integer labels.

    The rule is order sensitive: ``derive_seed(m, a, b)`` differs from
    ``derive_seed(m, b, a)``.
    """
    state = splitmix64(master & _MASK)
    for part in parts:
        state = splitmix64(state ^ splitmix64(part & _MASK))
    return state


def generator(master: int, *parts: int) -> np.random.Generator:
    """PCG64 generator seeded by :func:`derive_seed`."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, *parts)))


def rademacher(rng: np.random.Generator, size) -> np.ndarray:
    """Draw Rademacher multipliers: -1 or +1 with probability 0.5 each."""
    return rng.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
