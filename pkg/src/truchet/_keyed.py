"""Counter-based keyed random numbers.

Every random decision is a pure function of ``(key, counter)``, so a lazily
extended sequence never depends on the order in which it was queried and a
batch of samples can be generated with array arithmetic.  The mixer is the
SplitMix64 finalizer applied twice with two independent key words.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1

# stream tags
ORIGIN = 1
RIGHT = 2
LEFT = 3
BERNOULLI = 4
INSERTION = 5
NORMAL = 6
SAMPLE = 7


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def as_u64(seed) -> np.ndarray:
    """Reduce arbitrary Python integers (or arrays of them) modulo 2**64."""
    if isinstance(seed, np.ndarray):
        return seed.astype(np.uint64)
    return np.asarray(int(seed) & _MASK64, dtype=np.uint64)


def stream_key(seed, stream: int) -> tuple[np.ndarray, np.ndarray]:
    """Two 64-bit key words for ``(seed, stream)``; broadcasts over seed arrays."""
    s = as_u64(seed)
    with np.errstate(over="ignore"):
        k1 = mix64(mix64(s) + np.uint64(stream) * _GOLDEN)
        k2 = mix64(k1 ^ np.uint64(0xD1B54A32D192ED03))
    return k1, k2


def raw(key: tuple[np.ndarray, np.ndarray], counter) -> np.ndarray:
    k1, k2 = key
    c = np.asarray(counter).astype(np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(k1 + c * _GOLDEN) ^ k2)


def uniform(key, counter) -> np.ndarray:
    """Doubles in [0, 1) with 53 random bits."""
    return (raw(key, counter) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def derive_seeds(seed, n: int, stream: int = SAMPLE) -> np.ndarray:
    """``n`` child seeds of ``seed``; child ``i`` is the same regardless of ``n``."""
    return raw(stream_key(seed, stream), np.arange(n, dtype=np.int64))
