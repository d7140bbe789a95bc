"""Deterministic 64-bit PRNG used for all randomness in this package.

splitmix64 is chosen because it is trivial to reproduce bit-exactly in any
language: two xor-shift-multiply rounds on a 64-bit counter.  Scene
generation and the fixed network projection matrices both draw from it, so
identical seeds give identical artifacts on every platform.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream seeded with an arbitrary 64-bit integer."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MUL1) & _MASK
        z = ((z ^ (z >> 27)) * _MUL2) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """Uniform double in [lo, hi) with 53 bits of entropy."""
        u = (self.next_u64() >> 11) * (2.0 ** -53)
        return lo + (hi - lo) * u

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] (inclusive), via rejection-free modulo.

        The modulo bias is below 2**-40 for the ranges used here (< 2**20),
        which is irrelevant for scene layout but keeps the generator
        single-pass and portable.
        """
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def choice(self, items):
        return items[self.randint(0, len(items) - 1)]

    def fork(self, salt: int) -> "SplitMix64":
        """Independent child stream; deterministic function of (state, salt)."""
        return SplitMix64(self.next_u64() ^ (salt * _GAMMA & _MASK))
