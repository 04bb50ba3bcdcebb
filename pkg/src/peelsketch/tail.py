"""Tail-energy estimator from O(log n) linear measurements.

Each repetition keeps one accumulator ``y = sum_{i in S} sign(i) * x_i``
over a subsample ``S`` drawn at rate ``p = 1/(4k)``.  A repetition whose
sample misses the top-k coordinates sees only tail mass, with
``E[y^2] = p * ||tail||^2``; the median over repetitions discards the ones
that caught a head coordinate.  The estimate is on the per-k scale,

    t~ = tail_scale * median(y^2) / (p * k)  ~  ||x_{-k}||^2 / k,

and ``tail_scale`` is an empirical calibration constant of the profile.
"""

from __future__ import annotations

import numpy as np

from .core import DimensionError, ParameterError, Params, as_vector, tail_norm_sq
from .hashing import TAG_TAIL_SAMPLE, TAG_TAIL_SIGN, hash64, sign_from, stream_key

_CHUNK_ELEMS = 1 << 22


class TailSketch:
    def __init__(self, n: int, k: int, reps: int, seed: int = 0, scale: float = 1.0):
        if n < 1 or reps < 1 or not 1 <= k <= n:
            raise ParameterError(f"bad tail sketch sizes n={n}, k={k}, reps={reps}")
        if scale <= 0:
            raise ParameterError(f"scale must be positive, got {scale}")
        self.n = n
        self.k = k
        self.reps = reps
        self.seed = seed
        self.scale = scale
        self.rate = 1.0 / (4 * k)
        self.acc = np.zeros(reps)
        self._sample_key = stream_key(seed, TAG_TAIL_SAMPLE)
        self._sign_key = stream_key(seed, TAG_TAIL_SIGN)
        # P(word < threshold) = rate
        self._threshold = np.uint64(min(2**64 - 1, int(self.rate * 2.0**64)))

    @classmethod
    def from_params(cls, p: Params) -> TailSketch:
        return cls(p.n, p.k, p.tail_reps, p.seed, p.tail_scale)

    def plan(self, reps, idx) -> tuple[np.ndarray, np.ndarray]:
        """(member, sign) arrays for (repetition, i) pairs; arguments broadcast."""
        reps = np.asarray(reps, dtype=np.uint64)
        idx = np.asarray(idx, dtype=np.uint64)
        member = hash64(self._sample_key, reps, idx) < self._threshold
        sign = sign_from(hash64(self._sign_key, reps, idx))
        return member, sign

    def measure(self, x) -> None:
        x = as_vector(x)
        if x.shape[0] != self.n:
            raise DimensionError(f"vector has length {x.shape[0]}, expected {self.n}")
        idx = np.arange(self.n, dtype=np.uint64)
        step = max(1, _CHUNK_ELEMS // self.n)
        for lo in range(0, self.reps, step):
            reps = np.arange(lo, min(self.reps, lo + step), dtype=np.uint64)
            member, sign = self.plan(reps[:, None], idx[None, :])
            self.acc[lo : lo + len(reps)] += np.where(member, sign * x[None, :], 0.0).sum(axis=1)

    def update(self, i: int, delta: float) -> None:
        if not 0 <= i < self.n:
            raise ParameterError(f"index {i} out of range [0, {self.n})")
        member, sign = self.plan(np.arange(self.reps), i)
        self.acc += np.where(member, sign * float(delta), 0.0)

    def touches(self, idx) -> np.ndarray:
        """Number of repetitions each index is sampled into (its column weight)."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        member, _ = self.plan(np.arange(self.reps)[None, :], idx[:, None])
        return member.sum(axis=1)

    def query(self) -> float:
        """Tail estimate on the ``||x_{-k}||^2 / k`` scale."""
        sq = np.sort(self.acc**2)
        med = sq[(self.reps - 1) // 2]
        return float(self.scale * med / (self.rate * self.k))

    @property
    def num_rows(self) -> int:
        return self.reps


def oracle_tail(x, k: int) -> float:
    """Exact ``||x_{-k}||^2 / k`` computed from x itself (not a sketch)."""
    return tail_norm_sq(x, k) / k
