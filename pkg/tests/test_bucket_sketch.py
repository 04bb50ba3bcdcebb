from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from peelsketch.bucket_sketch import BucketSketch, column_sparsity, row_count
from peelsketch.code import BalancedCode
from peelsketch.core import DimensionError, ParameterError, Params
from peelsketch.hashing import HashPlan
from peelsketch.sketch import Sketch


def small_params(seed=0, **kw):
    return Params.from_profile(64, 2, 0.5, seed=seed, bucket_mult=2, **kw)


def loop_q(bs: BucketSketch, x) -> np.ndarray:
    q = np.zeros((bs.B, bs.L))
    for i, xi in enumerate(x):
        if xi == 0:
            continue
        enc = bs.code.encode(i)
        for v in bs.plan.edge(i):
            for j in range(bs.L):
                q[v, j] += bs.plan.sign(j, i) * int(enc[j]) * xi
    return q


@given(st.integers(0, 2**40))
def test_measure_matches_loop_oracle(seed):
    p = small_params(seed)
    x = np.random.default_rng(seed).integers(-20, 21, size=64).astype(float)
    x[::3] = 0.0
    bs = BucketSketch.from_params(p)
    bs.measure(x)
    assert np.array_equal(bs.q, loop_q(bs, x))


def test_update_and_residual():
    p = small_params(4)
    x = np.zeros(64)
    x[[3, 40]] = [2.0, -5.0]
    bs = BucketSketch.from_params(p)
    for i in (3, 40):
        bs.update(i, x[i])
    ref = BucketSketch.from_params(p)
    ref.measure(x)
    assert np.array_equal(bs.q, ref.q)
    for v in range(bs.B):
        assert np.array_equal(bs.residual(v, {3: 2.0, 40: -5.0}), np.zeros(bs.L))
    v = next(iter(bs.plan.edge(3)))
    expected = bs.q[v] - 2.0 * bs.patterns([3])[0]
    assert np.array_equal(bs.residual(v, {3: 2.0}), expected)


def test_component_mismatch():
    plan = HashPlan(0, 10, 3, 12)
    with pytest.raises(ParameterError):
        BucketSketch(64, plan, BalancedCode(24, 64))
    with pytest.raises(ParameterError):
        BucketSketch(32, plan, BalancedCode(12, 64))
    with pytest.raises(DimensionError):
        BucketSketch(64, plan, BalancedCode(12, 64)).measure(np.zeros(3))


def sketch_matrix(p: Params) -> np.ndarray:
    cols = []
    for i in range(p.n):
        e = np.zeros(p.n)
        e[i] = 1.0
        s = Sketch.of(e, p)
        cols.append(np.concatenate([s.tail.acc, s.cs.cells.ravel(), s.buckets.q.ravel()]))
    return np.stack(cols, axis=1)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_row_and_column_counts_match_explicit_matrix(seed):
    p = small_params(seed)
    phi = sketch_matrix(p)
    assert phi.shape[0] == row_count(p) == Sketch(p).num_rows
    assert (phi != 0).sum(axis=0).tolist() == column_sparsity(p, np.arange(p.n)).tolist()


def test_sketch_is_linear_map_of_matrix():
    p = small_params(7)
    phi = sketch_matrix(p)
    x = np.random.default_rng(0).integers(-9, 10, size=64).astype(float)
    s = Sketch.of(x, p)
    y = np.concatenate([s.tail.acc, s.cs.cells.ravel(), s.buckets.q.ravel()])
    assert np.array_equal(phi @ x, y)


def test_paper_columns_without_materializing():
    p = Params.from_profile(1 << 12, 2, 0.5, profile="paper")
    cols = column_sparsity(p, np.arange(0, 1 << 12, 97))
    lg = 12
    assert np.all(cols >= p.cs_rows + p.h * p.code_len // 2)
    assert np.all(cols <= 8 * lg + 10 * lg + 3 * 2048 * lg / 2)


def test_container_roundtrip_and_layout(tmp_path):
    p = small_params(3)
    x = np.random.default_rng(1).standard_normal(64)
    s = Sketch.of(x, p)
    path = tmp_path / "s.psks"
    s.save(path)
    raw = path.read_bytes()
    magic, version, count, _ = struct.unpack_from("<4sIII", raw, 0)
    assert (magic, version, count) == (b"PSKS", 1, 4)
    tags = [struct.unpack_from("<4sQQ", raw, 16 + 20 * t)[0] for t in range(4)]
    assert tags == [b"PARM", b"TAIL", b"CSKT", b"BCKT"]
    tag, off, length = struct.unpack_from("<4sQQ", raw, 16 + 20 * 3)
    assert off + length == len(raw) and length == 8 * s.buckets.q.size
    t = Sketch.load(path)
    assert t.params == p
    assert np.array_equal(t.buckets.q, s.buckets.q)
    assert np.array_equal(t.cs.cells, s.cs.cells)
    assert np.array_equal(t.tail.acc, s.tail.acc)


def test_container_errors(tmp_path):
    p = small_params()
    path = tmp_path / "s.psks"
    Sketch(p).save(path)
    raw = path.read_bytes()
    for name, blob in [("short", raw[:8]), ("magic", b"XXXX" + raw[4:]), ("cut", raw[:-8]),
                       ("version", raw[:4] + struct.pack("<I", 9) + raw[8:])]:
        bad = tmp_path / name
        bad.write_bytes(blob)
        with pytest.raises(ParameterError):
            Sketch.load(bad)
