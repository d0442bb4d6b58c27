"""Portable deterministic pseudo-randomness for resampling.

Bootstrap results must reproduce bit-identically across machines, Python
versions, and independent reimplementations, so the generator is pinned
here rather than delegated to library internals. The recipe:

1. splitmix64: state advances by the 64-bit golden gamma 0x9E3779B97F4A7C15;
   each output is the finalizer
       z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
       z ^= z >> 27; z *= 0x94D049BB133111EB;
       z ^= z >> 31
   applied to the advanced state. `mix64(x)` is the first splitmix64 output
   for initial state x.
2. The substream for run r uses seed XOR mix64(r) as its splitmix64 state,
   and the first four splitmix64 outputs become the xoshiro256** state
   (s0..s3 in draw order). An all-zero state falls back to s0 = gamma.
3. xoshiro256** emits rotl(s1 * 5, 7) * 9 per step with the reference
   state transition (t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3;
   s2 ^= t; s3 = rotl(s3, 45)), all arithmetic modulo 2**64.
4. Bounded draws take the low bit_length(m - 1) bits of an output and
   reject values >= m.
5. Sampling k of n without replacement is a partial Fisher-Yates shuffle
   of [0..n-1] from the front: at position i swap with i + draw(n - i);
   the first k entries, in draw order, form the sample.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix(self.state)


def mix64(x: int) -> int:
    """First splitmix64 output for initial state x."""
    return _mix((x + _GAMMA) & _MASK64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    def __init__(self, seed: int):
        sm = SplitMix64(seed)
        self._s = [sm.next_u64() for _ in range(4)]
        if not any(self._s):
            self._s[0] = _GAMMA

    @classmethod
    def substream(cls, seed: int, index: int) -> "Xoshiro256StarStar":
        return cls((seed & _MASK64) ^ mix64(index))

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s[1] << 17) & _MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by masked rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        mask = (1 << (bound - 1).bit_length()) - 1
        while True:
            r = self.next_u64() & mask
            if r < bound:
                return r


def sample_without_replacement(rng: Xoshiro256StarStar, n: int, k: int) -> list[int]:
    """First k entries of a partial Fisher-Yates shuffle of range(n)."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot sample {k} of {n}")
    idx = list(range(n))
    for i in range(k):
        j = i + rng.next_below(n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:k]
