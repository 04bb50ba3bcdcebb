"""Balanced binary code over index identities.

Reference construction: write ``i`` in ``b = ceil(log2 n)`` bits, repeat
each bit ``L / b`` times, XOR with a fixed pseudo-random mask.  Within every
repetition group the mask has exactly half ones, so every codeword has
exactly ``L / 2`` ones whatever the message.  Decoding unmasks and takes a
per-group majority (ties go to 0).

Anything with the same ``encode``/``decode``/``length`` surface can replace
:class:`BalancedCode` in the bucket sketch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ParameterError, log2n
from .hashing import TAG_CODE_MASK, hash64, stream_key


@dataclass(frozen=True)
class BalancedCode:
    L: int
    n: int
    seed: int = 0
    mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        b = log2n(self.n)
        if self.L % b:
            raise ParameterError(f"code length {self.L} must be a multiple of {b} bits")
        rep = self.L // b
        if rep % 2:
            raise ParameterError(f"repetition factor {rep} must be even")
        key = stream_key(self.seed, TAG_CODE_MASK)
        words = hash64(key, np.arange(b, dtype=np.uint64)[:, None], np.arange(rep, dtype=np.uint64)[None, :])
        ranks = np.argsort(np.argsort(words, axis=1, kind="stable"), axis=1)
        mask = (ranks < rep // 2).astype(np.uint8).reshape(-1)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def bits(self) -> int:
        return log2n(self.n)

    @property
    def rep(self) -> int:
        return self.L // self.bits

    @property
    def length(self) -> int:
        return self.L

    @property
    def radius(self) -> int:
        """Worst-case number of flipped positions that always decodes correctly."""
        return (self.rep - 1) // 2

    def _check_index(self, idx: np.ndarray) -> None:
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ParameterError(f"index out of range [0, {self.n})")

    def encode_many(self, idx) -> np.ndarray:
        """Codewords for many indices, shape ``(len(idx), L)``, dtype uint8."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        self._check_index(idx)
        shifts = np.arange(self.bits, dtype=np.int64)
        msg = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        return np.repeat(msg, self.rep, axis=1) ^ self.mask[None, :]

    def encode(self, i: int) -> np.ndarray:
        return self.encode_many([i])[0]

    def decode(self, bits) -> int | None:
        """Index whose codeword is closest group-wise, or None if out of range."""
        y = np.asarray(bits)
        if y.shape != (self.L,):
            raise ParameterError(f"expected {self.L} bits, got shape {y.shape}")
        votes = (y.astype(np.uint8) ^ self.mask).reshape(self.bits, self.rep).sum(axis=1)
        msg = (2 * votes > self.rep).astype(np.int64)
        i = int(msg @ (1 << np.arange(self.bits, dtype=np.int64)))
        return i if i < self.n else None

    def ones_fraction(self, i: int) -> float:
        return float(self.encode(i).mean())


def pack_bits(bits: np.ndarray) -> bytes:
    """Serialize a bit string as little-endian 64-bit words, LSB first."""
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-bits.shape[0]) % 64
    packed = np.packbits(np.concatenate([bits, np.zeros(pad, np.uint8)]), bitorder="little")
    return packed.tobytes()


def unpack_bits(data: bytes, L: int) -> np.ndarray:
    if len(data) != 8 * ((L + 63) // 64):
        raise ParameterError(f"expected {8 * ((L + 63) // 64)} bytes for {L} bits, got {len(data)}")
    return np.unpackbits(np.frombuffer(data, np.uint8), bitorder="little")[:L]
