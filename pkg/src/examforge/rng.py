"""Pinned deterministic PRNG used for all draft sampling.

The generator is SplitMix64: 64-bit state advanced by the odd constant
0x9E3779B97F4A7C15 per draw, output passed through the shift/xor/multiply
finalizer ``mix64``.  The algorithm identity is a contract, not an
implementation detail: drafts must reproduce bit-for-bit across runs,
platforms and releases, so the generator lives here in ~40 lines of pure
integer arithmetic instead of delegating to a library generator whose
stream could change underneath us.

Draw discipline (also part of the contract):

* ``SplitMix64.next_below(n)`` draws ``(n-1).bit_length()`` bits
  (big-endian assembly of as many ``next_u64`` words as needed, keeping
  the high bits) and rejects values >= n.  No modulo bias.
* Derived seeds come from ``derive_seed(seed, index)`` =
  ``mix64(seed + index * 0x9E3779B97F4A7C15 mod 2^64)``.  The gamma is
  odd, so for a fixed seed distinct indices give distinct derived seeds.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Derive the ``index``-th child seed of ``seed`` (splittable streams)."""
    return mix64((seed + (index & MASK64) * GOLDEN_GAMMA) & MASK64)


class SplitMix64:
    """Sequential SplitMix64 stream seeded with a 64-bit integer."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        return mix64(self._state)

    def next_bits(self, k: int) -> int:
        """Uniform integer in [0, 2**k); high bits of big-endian u64 words."""
        words = (k + 63) // 64
        x = 0
        for _ in range(words):
            x = (x << 64) | self.next_u64()
        return x >> (words * 64 - k)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) for any n >= 1, unbiased by rejection."""
        if n < 1:
            raise ValueError(f"next_below requires n >= 1, got {n}")
        if n == 1:
            return 0
        k = (n - 1).bit_length()
        while True:
            r = self.next_bits(k)
            if r < n:
                return r
