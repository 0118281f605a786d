"""Deterministic 64-bit PRNG shared by sampling code.

xorshift64* with the standard shift triple (12, 25, 27) and multiplier
0x2545F4914F6CDD1D. Pinned here, rather than deferring to the host
library, so samples reproduce bit-for-bit across platforms and
implementations.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
_SEED_SCRAMBLE = 0x9E3779B97F4A7C15  # golden-ratio increment, avoids state 0


class Xorshift64Star:
    def __init__(self, seed: int):
        state = ((int(seed) * _SEED_SCRAMBLE) + 1) & _MASK
        self.state = state if state != 0 else _SEED_SCRAMBLE

    def next_u64(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x ^= (x << 25) & _MASK
        x ^= (x >> 27)
        self.state = x
        return (x * _MULT) & _MASK

    def below(self, n: int) -> int:
        """Uniform-enough integer in [0, n) via multiply-shift."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        return (self.next_u64() * n) >> 64

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n) by partial Fisher-Yates."""
        k = min(k, n)
        pool = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
