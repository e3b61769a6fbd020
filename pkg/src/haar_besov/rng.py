"""Deterministic pseudo-random streams for the experiment harness.

The generator is xoshiro256** with splitmix64 state initialization, run in
64 parallel lanes for vectorization.  The stream of a seed is defined as:
lane j (j = 0..63) takes its four state words from positions 4j..4j+3 of
the splitmix64 sequence of the seed, and outputs are emitted lane-major
(one word from every lane per step).  Everything is pure 64-bit integer
arithmetic, so a given seed yields the same draws on every platform.

Uniform doubles take the top 53 bits of a word; normal variates come from
the Box-Muller transform applied to consecutive uniform pairs.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["RandomStream", "derive_seed", "splitmix64"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_LANES = 64


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of the splitmix64 sequence of ``seed``."""
    with np.errstate(over="ignore"):
        steps = np.arange(1, count + 1, dtype=np.uint64)
        return _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + steps * _GOLDEN)


def derive_seed(seed: int, *salts: int) -> int:
    """Stable 64-bit sub-stream seed from a base seed and integer salts."""
    with np.errstate(over="ignore"):
        x = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        for salt in salts:
            x = _mix(x + _GOLDEN + np.uint64(salt & 0xFFFFFFFFFFFFFFFF) * _MIX1)
        return int(x)


def _rotl(x: np.ndarray, r: int) -> np.ndarray:
    r = np.uint64(r)
    return (x << r) | (x >> (np.uint64(64) - r))


class RandomStream:
    """xoshiro256** stream (64 splitmix64-seeded lanes, lane-major output)."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        words = splitmix64(self.seed, 4 * _LANES)
        self._state = words.reshape(_LANES, 4).T.copy()

    def _step(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            s0, s1, s2, s3 = self._state
            out = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
            t = s1 << np.uint64(17)
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = _rotl(s3, 45)
            self._state = np.stack([s0, s1, s2, s3])
            return out

    def random_u64(self, n: int) -> np.ndarray:
        steps = (n + _LANES - 1) // _LANES
        if steps == 0:
            return np.zeros(0, dtype=np.uint64)
        out = np.concatenate([self._step() for _ in range(steps)])
        return out[:n]

    def uniform(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """n doubles, uniform on [lo, hi)."""
        u = (self.random_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return lo + u * (hi - lo)

    def normal(self, n: int) -> np.ndarray:
        """n standard normal variates (Box-Muller on uniform pairs)."""
        half = (n + 1) // 2
        u1 = self.uniform(half)
        u2 = self.uniform(half)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        ang = (2.0 * math.pi) * u2
        z = np.empty(2 * half)
        z[0::2] = r * np.cos(ang)
        z[1::2] = r * np.sin(ang)
        return z[:n]
