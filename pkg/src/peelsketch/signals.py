"""Synthetic signal families for experiments and tests."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import ParameterError

MODELS = ("exact-sparse", "sparse-plus-gaussian", "zipf", "zero")


@dataclass(frozen=True)
class SignalModel:
    """Parameters of one signal family.

    ``sparse-plus-gaussian`` plants ``heads`` coordinates whose squared
    magnitudes are log-uniform in ``[head_low, head_high] * (eps/k) * T^2``,
    then fills the rest with Gaussian noise scaled so that the energy outside
    the top k is ``T^2`` (``T = tail_norm``), assuming heads beyond the top k
    dominate every noise entry.
    """

    kind: str = "sparse-plus-gaussian"
    heads: int | None = None
    head_low: float = 2.0
    head_high: float = 12.0
    tail_norm: float = 1.0
    zipf_exponent: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in MODELS:
            raise ParameterError(f"unknown signal model {self.kind!r}; choose from {MODELS}")
        if self.head_low <= 0 or self.head_high < self.head_low:
            raise ParameterError("need 0 < head_low <= head_high")

    def to_dict(self) -> dict:
        return asdict(self)


def generate(model: SignalModel, n: int, k: int, eps: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(x, planted)`` where ``planted`` lists the head positions (sorted)."""
    rng = np.random.default_rng(seed)
    heads = k if model.heads is None else model.heads
    if heads > n:
        raise ParameterError(f"cannot plant {heads} heads in dimension {n}")
    x = np.zeros(n)
    if model.kind == "zero":
        return x, np.zeros(0, dtype=np.int64)
    if model.kind == "zipf":
        ranks = np.arange(1, n + 1, dtype=np.float64)
        mags = model.tail_norm * ranks ** (-model.zipf_exponent)
        perm = rng.permutation(n)
        x[perm] = mags * rng.choice([-1.0, 1.0], size=n)
        return x, np.sort(perm[:heads])

    pos = np.sort(rng.choice(n, size=heads, replace=False))
    signs = rng.choice([-1.0, 1.0], size=heads)
    if model.kind == "exact-sparse":
        x[pos] = signs * rng.uniform(1.0, 10.0, size=heads) * model.tail_norm
        return x, pos

    T2 = model.tail_norm**2
    mult = np.exp(rng.uniform(np.log(model.head_low), np.log(model.head_high), size=heads))
    head_sq = mult * (eps / k) * T2
    extra = np.sort(head_sq)[: max(0, heads - k)].sum()
    if extra >= T2:
        raise ParameterError("planted heads beyond the top k exceed the tail budget")
    noise = rng.standard_normal(n)
    noise[pos] = 0.0
    noise *= np.sqrt(T2 - extra) / np.linalg.norm(noise)
    x[:] = noise
    x[pos] = signs * np.sqrt(head_sq)
    return x, pos
