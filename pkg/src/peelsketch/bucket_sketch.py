"""Code-augmented bucket measurements and the residuals the decoder reads.

Bucket ``v`` holds ``L`` cells

    q[v, j] = sum over i with v in edge(i) of sign(j, i) * Enc(i)_j * x_i.

Also home to the exact row / column-sparsity accounting of the full sketch
(tail rows + Count-Sketch cells + bucket cells).
"""

from __future__ import annotations

from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .code import BalancedCode
from .core import DimensionError, ParameterError, Params, as_vector
from .hashing import HashPlan
from .tail import TailSketch

_CHUNK_ELEMS = 1 << 22


class BucketSketch:
    def __init__(self, n: int, plan: HashPlan, code: BalancedCode):
        if code.L != plan.L:
            raise ParameterError(f"code length {code.L} != sign count {plan.L}")
        if code.n != n:
            raise ParameterError(f"code message space {code.n} != n={n}")
        self.n = n
        self.plan = plan
        self.code = code
        self.q = np.zeros((plan.B, plan.L))

    @classmethod
    def from_params(cls, p: Params) -> BucketSketch:
        plan = HashPlan(p.seed, p.num_buckets, p.h, p.code_len)
        return cls(p.n, plan, BalancedCode(p.code_len, p.n, p.seed))

    @property
    def B(self) -> int:
        return self.plan.B

    @property
    def L(self) -> int:
        return self.plan.L

    def patterns(self, idx) -> np.ndarray:
        """``sign(j, i) * Enc(i)_j`` for each index, shape ``(len(idx), L)``, int8."""
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        return self.plan.signs(idx) * self.code.encode_many(idx).astype(np.int8)

    def measure(self, x) -> None:
        x = as_vector(x)
        if x.shape[0] != self.n:
            raise DimensionError(f"vector has length {x.shape[0]}, expected {self.n}")
        h = self.plan.h
        step = max(1, _CHUNK_ELEMS // self.L)
        for lo in range(0, self.n, step):
            idx = np.arange(lo, min(self.n, lo + step))
            xs = x[idx]
            nz = xs != 0.0
            if not nz.any():
                continue
            idx, xs = idx[nz], xs[nz]
            edges = self.plan.edges(idx)
            cols = np.repeat(np.arange(idx.shape[0]), h)
            incidence = sp.csr_matrix(
                (np.repeat(xs, h), (edges.reshape(-1), cols)), shape=(self.B, idx.shape[0])
            )
            self.q += incidence @ self.patterns(idx).astype(np.float64)

    def update(self, i: int, delta: float) -> None:
        if not 0 <= i < self.n:
            raise ParameterError(f"index {i} out of range [0, {self.n})")
        row = float(delta) * self.patterns([i])[0]
        for v in self.plan.edges([i])[0]:
            self.q[v] += row

    def residual(self, v: int, recovered: Mapping[int, float]) -> np.ndarray:
        """Reference ``p_v``: ``q[v]`` minus the recovered estimates hashed to v."""
        p = self.q[v].copy()
        if not recovered:
            return p
        keys = np.fromiter(recovered.keys(), dtype=np.int64, count=len(recovered))
        hit = (self.plan.edges(keys) == v).any(axis=1)
        for i in keys[hit].tolist():
            p -= self.patterns([i])[0] * recovered[i]
        return p

    @property
    def num_rows(self) -> int:
        return self.B * self.L


# ---------------------------------------------------------------------------
# matrix accounting


def row_count(p: Params) -> int:
    """Total rows m = tail repetitions + Count-Sketch cells + bucket cells."""
    return p.tail_reps + p.cs_rows * p.cs_buckets + p.num_buckets * p.code_len


def column_sparsity(p: Params, idx) -> np.ndarray:
    """Exact nonzeros in column i of the sketch matrix, for each index.

    Tail rows sampling i, one cell per Count-Sketch row, and in each of the
    h buckets of i one cell per 1 in ``Enc(i)`` (signs are never zero).
    """
    idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
    tail = TailSketch(p.n, p.k, p.tail_reps, p.seed, p.tail_scale).touches(idx)
    code = BalancedCode(p.code_len, p.n, p.seed)
    ones = np.empty(idx.shape[0], dtype=np.int64)
    step = max(1, _CHUNK_ELEMS // p.code_len)
    for lo in range(0, idx.shape[0], step):
        ones[lo : lo + step] = code.encode_many(idx[lo : lo + step]).sum(axis=1)
    return tail + p.cs_rows + p.h * ones
