"""Portable seeded PRNG: splitmix64 seed expansion feeding xoshiro256**.

Every draw the augmentation pipeline makes goes through this module, so two
runs with the same seed produce byte-identical streams on any platform.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Rng:
    """xoshiro256** generator seeded through splitmix64.

    Bounded integers use Lemire's multiply-shift reduction without the
    rejection step, so each bounded draw consumes exactly one 64-bit output.
    """

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        sm = int(seed) & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s

    @classmethod
    def from_state(cls, state) -> "Rng":
        """Rebuild a generator from four raw 64-bit words."""
        if len(state) != 4 or not any(state):
            raise ValueError("xoshiro256 state must be four words, not all zero")
        rng = cls.__new__(cls)
        rng._s = [int(w) & MASK64 for w in state]
        return rng

    @property
    def state(self) -> tuple[int, int, int, int]:
        return tuple(self._s)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def below(self, n: int) -> int:
        """Integer in ``[0, n)`` via Lemire reduction."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        return (self.next_u64() * n) >> 64

    def random(self) -> float:
        """Float in ``[0, 1)`` from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def normal(self) -> float:
        """Standard normal via Box-Muller; consumes two outputs."""
        u1 = 1.0 - self.random()
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def permutation(self, n: int) -> list[int]:
        """Uniform permutation of ``range(n)`` by Fisher-Yates (high to low)."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def sample(self, n: int, k: int) -> list[int]:
        """``k`` distinct indices from ``range(n)``, in draw order (partial Fisher-Yates)."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} of {n} without replacement")
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def spawn(self) -> "Rng":
        """Independent child generator seeded from this stream."""
        return Rng(self.next_u64())
