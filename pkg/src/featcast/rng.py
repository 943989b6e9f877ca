"""xoshiro256** generator with SplitMix64 seeding.

Weight generation has to be reproducible from the algorithm description
alone, so the stream is implemented here rather than borrowed from numpy.

Draw conventions:

* the 256-bit state is four successive SplitMix64 outputs of the seed;
* a uniform double is ``(next() >> 11) * 2**-53``, in [0, 1);
* normals come in Box-Muller pairs from two consecutive uniforms ``a, b``:
  ``r = sqrt(-2 ln(1 - a))``, emitting ``r cos(2 pi b)`` then
  ``r sin(2 pi b)``. An odd request discards the final sine value.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_INV_2_53 = 1.0 / (1 << 53)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


class Xoshiro256StarStar:
    def __init__(self, seed: int):
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        if not any(s):
            raise ValueError("degenerate all-zero state")
        self._s = s

    @classmethod
    def from_state(cls, state) -> "Xoshiro256StarStar":
        gen = cls.__new__(cls)
        gen._s = [int(x) & _MASK for x in state]
        return gen

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def normals(self, n: int) -> np.ndarray:
        out = np.empty(n + (n & 1))
        nxt = self.next_u64
        two_pi = 2.0 * math.pi
        for j in range(0, n, 2):
            a = (nxt() >> 11) * _INV_2_53
            b = (nxt() >> 11) * _INV_2_53
            r = math.sqrt(-2.0 * math.log(1.0 - a))
            out[j] = r * math.cos(two_pi * b)
            out[j + 1] = r * math.sin(two_pi * b)
        return out[:n]

    def normal_array(self, shape: tuple[int, ...], std: float = 1.0) -> np.ndarray:
        """Row-major fill of ``shape`` with N(0, std**2) draws."""
        n = int(np.prod(shape))
        return (self.normals(n) * std).reshape(shape)
