"""Count-Sketch point estimator.

``rows x buckets`` real cells; coordinate i adds ``sign(row, i) * x_i`` to
one cell per row, and the estimate of ``x_i`` is the (lower) median of the
signed row readings.
"""

from __future__ import annotations

import numpy as np

from .core import DimensionError, ParameterError, Params, as_vector
from .hashing import TAG_CS_BUCKET, TAG_CS_SIGN, hash64, sign_from, stream_key, uniform_below

_ROW_CHUNK_ELEMS = 1 << 22


class CountSketch:
    def __init__(self, n: int, rows: int, buckets: int, seed: int = 0):
        if n < 1 or rows < 1 or buckets < 1:
            raise ParameterError(f"n, rows and buckets must be positive, got {n}, {rows}, {buckets}")
        self.n = n
        self.rows = rows
        self.buckets = buckets
        self.seed = seed
        self.cells = np.zeros((rows, buckets))
        self._bucket_key = stream_key(seed, TAG_CS_BUCKET)
        self._sign_key = stream_key(seed, TAG_CS_SIGN)

    @classmethod
    def from_params(cls, p: Params) -> CountSketch:
        return cls(p.n, p.cs_rows, p.cs_buckets, p.seed)

    def plan(self, rows, idx) -> tuple[np.ndarray, np.ndarray]:
        """(bucket, sign) arrays for every (row, i) pair; rows and idx broadcast."""
        rows = np.asarray(rows, dtype=np.uint64)
        idx = np.asarray(idx, dtype=np.uint64)
        bucket = uniform_below(hash64(self._bucket_key, rows, idx), self.buckets)
        sign = sign_from(hash64(self._sign_key, rows, idx))
        return bucket, sign

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ParameterError(f"index {i} out of range [0, {self.n})")

    def measure(self, x) -> None:
        """Add the sketch of ``x`` to the cells."""
        x = as_vector(x)
        if x.shape[0] != self.n:
            raise DimensionError(f"vector has length {x.shape[0]}, expected {self.n}")
        idx = np.arange(self.n, dtype=np.uint64)
        step = max(1, _ROW_CHUNK_ELEMS // self.n)
        for lo in range(0, self.rows, step):
            rows = np.arange(lo, min(self.rows, lo + step), dtype=np.uint64)
            bucket, sign = self.plan(rows[:, None], idx[None, :])
            for t, row in enumerate(rows.tolist()):
                self.cells[row] += np.bincount(bucket[t], weights=sign[t] * x, minlength=self.buckets)

    def update(self, i: int, delta: float) -> None:
        self._check_index(i)
        rows = np.arange(self.rows)
        bucket, sign = self.plan(rows, i)
        self.cells[rows, bucket] += sign * float(delta)

    def row_estimates(self, i: int) -> np.ndarray:
        rows = np.arange(self.rows)
        bucket, sign = self.plan(rows, i)
        return sign * self.cells[rows, bucket]

    def query(self, i: int) -> float:
        self._check_index(i)
        vals = self.row_estimates(i)
        mid = (self.rows - 1) // 2
        return float(np.partition(vals, mid)[mid])

    def query_many(self, idx) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ParameterError(f"index out of range [0, {self.n})")
        rows = np.arange(self.rows)
        bucket, sign = self.plan(rows[None, :], idx[:, None])
        vals = sign * self.cells[rows[None, :], bucket]
        mid = (self.rows - 1) // 2
        return np.partition(vals, mid, axis=1)[:, mid]

    @property
    def num_rows(self) -> int:
        return self.rows * self.buckets
