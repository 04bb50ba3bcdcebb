"""Seeded counter-based hashing for bucket sets and sign functions.

All randomness in a sketch comes from one 64-bit seed.  Each consumer
draws from its own stream tag, so e.g. the Count-Sketch rows and the bucket
edges never share hash values.  The mixer is the splitmix64 finalizer
applied twice over ``(key, j, i)``; it is not cryptographic and makes no
k-wise independence claim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParameterError

_M64 = (1 << 64) - 1
_PHI = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)

# stream tags
TAG_EDGE = 1
TAG_BUCKET_SIGN = 2
TAG_CS_BUCKET = 3
TAG_CS_SIGN = 4
TAG_TAIL_SAMPLE = 5
TAG_TAIL_SIGN = 6
TAG_CODE_MASK = 7


def _fmix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _C1
    z = z ^ (z >> np.uint64(27))
    z = z * _C2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, tag: int) -> np.uint64:
    """64-bit key for one (seed, tag) stream."""
    z = np.array([(int(seed) + (int(tag) + 1) * 0x9E3779B97F4A7C15) & _M64], dtype=np.uint64)
    return _fmix(_fmix(z))[0]


def hash64(key: np.uint64, j, i) -> np.ndarray:
    """Mix ``(key, j, i)`` to uniform 64-bit words; j and i broadcast."""
    j = np.asarray(j, dtype=np.uint64)
    i = np.asarray(i, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _fmix(key + (j + np.uint64(1)) * _PHI)
        return _fmix(z + (i + np.uint64(1)) * _PHI)


def uniform_below(words: np.ndarray, bound) -> np.ndarray:
    """Map 64-bit words to integers in [0, bound) (modulo bias < bound / 2**64)."""
    return (words % np.asarray(bound, dtype=np.uint64)).astype(np.int64)


def sign_from(words: np.ndarray) -> np.ndarray:
    """+1/-1 from the top bit of each word."""
    return 1 - 2 * (words >> np.uint64(63)).astype(np.int8)


@dataclass(frozen=True)
class HashPlan:
    """Bucket sets ``edge(i)`` and signs ``sign(j, i)`` for one sketch.

    ``B`` buckets, arity ``h`` and ``L`` sign functions.  Signs are packed
    64 per hash word: ``sign(j, i)`` is bit ``j % 64`` of the word for
    ``(j // 64, i)``.
    """

    seed: int
    B: int
    h: int
    L: int

    def __post_init__(self) -> None:
        if self.h < 1 or self.B < self.h:
            raise ParameterError(f"need B >= h >= 1, got B={self.B}, h={self.h}")
        if self.L < 1:
            raise ParameterError(f"need L >= 1, got {self.L}")

    @property
    def edge_key(self) -> np.uint64:
        return stream_key(self.seed, TAG_EDGE)

    @property
    def sign_key(self) -> np.uint64:
        return stream_key(self.seed, TAG_BUCKET_SIGN)

    def edges(self, idx) -> np.ndarray:
        """h distinct buckets per index, shape ``(len(idx), h)``, in draw order.

        Slot t draws uniformly from the ``B - t`` buckets not yet taken, so
        the resulting set is a uniform size-h subset.
        """
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if np.any(idx < 0):
            raise ParameterError("indices must be non-negative")
        key = self.edge_key
        out = np.empty((idx.shape[0], self.h), dtype=np.int64)
        for t in range(self.h):
            val = uniform_below(hash64(key, t, idx), self.B - t)
            if t:
                taken = np.sort(out[:, :t], axis=1)
                for col in range(t):
                    val += val >= taken[:, col]
            out[:, t] = val
        return out

    def edge(self, i: int) -> frozenset[int]:
        return frozenset(self.edges([i])[0].tolist())

    def sign_words(self, idx) -> np.ndarray:
        """Packed sign words, shape ``(len(idx), ceil(L / 64))``."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        blocks = np.arange((self.L + 63) // 64, dtype=np.uint64)
        return hash64(self.sign_key, blocks[None, :], idx[:, None])

    def signs(self, idx) -> np.ndarray:
        """Sign matrix, shape ``(len(idx), L)``, entries +1/-1 as int8."""
        words = self.sign_words(idx)
        bits = np.unpackbits(words.astype("<u8").view(np.uint8), axis=1, bitorder="little")
        return (1 - 2 * bits[:, : self.L].astype(np.int8)).astype(np.int8)

    def sign(self, j: int, i: int) -> int:
        if not 0 <= j < self.L:
            raise ParameterError(f"sign index j={j} out of range [0, {self.L})")
        word = hash64(self.sign_key, j // 64, i)
        return 1 - 2 * int((int(word) >> (j % 64)) & 1)
