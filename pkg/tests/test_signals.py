from __future__ import annotations

import numpy as np
import pytest

from peelsketch.core import ParameterError, tail_norm_sq
from peelsketch.signals import SignalModel, generate


def test_exact_sparse_support():
    x, pos = generate(SignalModel("exact-sparse"), 1000, 4, 0.5, seed=1)
    assert np.count_nonzero(x) == 4
    assert np.flatnonzero(x).tolist() == pos.tolist()
    assert np.all((np.abs(x[pos]) >= 1) & (np.abs(x[pos]) <= 10))


def test_zipf_power_law():
    x, _ = generate(SignalModel("zipf", zipf_exponent=1.3), 5000, 8, 0.5, seed=2)
    mags = np.sort(np.abs(x))[::-1]
    slope = np.polyfit(np.log(np.arange(1, 5001)), np.log(mags), 1)[0]
    assert slope == pytest.approx(-1.3, abs=1e-9)


def test_planted_heads_and_tail_energy():
    n, k, eps = 1 << 14, 8, 0.25
    x, pos = generate(SignalModel("sparse-plus-gaussian", tail_norm=2.0), n, k, eps, seed=3)
    head_sq = x[pos] ** 2
    lo, hi = 2.0 * eps / k * 4.0, 12.0 * eps / k * 4.0
    assert np.all((head_sq >= lo * (1 - 1e-12)) & (head_sq <= hi * (1 + 1e-12)))
    assert tail_norm_sq(x, k) == pytest.approx(4.0, rel=1e-9)


def test_extra_heads_count_toward_tail():
    n, k, eps = 1 << 14, 8, 0.25
    x, pos = generate(SignalModel("sparse-plus-gaussian", heads=11), n, k, eps, seed=4)
    assert len(pos) == 11
    assert tail_norm_sq(x, k) == pytest.approx(1.0, rel=1e-9)


def test_determinism_and_zero():
    a, _ = generate(SignalModel(), 500, 3, 0.5, seed=9)
    b, _ = generate(SignalModel(), 500, 3, 0.5, seed=9)
    assert np.array_equal(a, b)
    z, pos = generate(SignalModel("zero"), 10, 1, 0.5, seed=0)
    assert not z.any() and pos.size == 0


def test_bad_models():
    with pytest.raises(ParameterError):
        SignalModel("bogus")
    with pytest.raises(ParameterError):
        SignalModel(head_low=3, head_high=2)
    with pytest.raises(ParameterError):
        generate(SignalModel("sparse-plus-gaussian", heads=40), 1000, 2, 0.9, seed=0)
