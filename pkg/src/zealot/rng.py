"""Counter-based 64-bit random numbers.

Every stream is the SplitMix64 output function applied to an arithmetic
counter ``key + i * GAMMA``.  Streams are addressed by a key derived from
``(seed, word, word, ...)`` so independent consumers (per-site Poisson
streams, replicas) never share state and can be regenerated exactly.

The compiled kernels in ``_ckernels.pyx`` implement the same arithmetic, so
a given key yields bit-identical draws in both backends.
"""

from __future__ import annotations

import math

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
_TWO_M53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *words: int) -> int:
    """Fold ``words`` into ``seed`` to address an independent stream."""
    k = mix64(seed & MASK64)
    for w in words:
        k = mix64((k + GAMMA * ((w & MASK64) + 1)) & MASK64)
    return k


def replicate_seed(master: int, index: int) -> int:
    """Seed of replica ``index`` under ``master``.

    Bit-exact definition: ``mix64(master + (index + 1) * GAMMA mod 2**64)``.
    Since GAMMA is odd and mix64 is a bijection, distinct indices (below
    2**64) give distinct seeds.
    """
    if index < 0:
        raise ValueError("replica index must be non-negative")
    return mix64((master + (index + 1) * GAMMA) & MASK64)


class CounterRNG:
    """Sequential reader over one counter-based stream."""

    __slots__ = ("state",)

    def __init__(self, key: int):
        self.state = key & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform double on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _TWO_M53

    def below(self, n: int) -> int:
        """Uniform integer on {0, ..., n-1}."""
        return int(self.random() * n)

    def exponential(self, rate: float) -> float:
        return -math.log(1.0 - self.random()) / rate

    def sample_distinct(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), by partial Fisher-Yates."""
        idx = list(range(n))
        for i in range(k):
            j = i + self.below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k]
