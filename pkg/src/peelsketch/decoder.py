"""Peeling decoder over the bucket sketch.

Buckets are processed from a FIFO worklist.  For bucket v the decoder
reads its residual ``p_v`` (bucket cells minus the contributions of the
estimates recovered so far), marks the half of the positions with largest
``|p_v[j]|`` as 1, decodes that bit string to a candidate i, and keeps i if
``v`` is one of i's buckets, i is new, and the Count-Sketch estimate clears

    xhat_i^2 >= (eps / (2k)) * t_hat,      t_hat ~ ||x_{-k}||^2.

Keeping i subtracts ``xhat_i`` from the residuals of its h buckets and puts
them back on the worklist.  The output keeps the min(3k, |R|) recovered
coordinates of largest ``|xhat_i|``.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import Params, SparseApprox, as_vector, classify, tail_norm_sq
from .peeling import WeightedHypergraph, peel
from .sketch import Sketch


@dataclass
class RecoveryOutput:
    R: list[int]
    S: list[int]
    x_prime: SparseApprox
    estimates: dict[int, float]
    stats: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "indices": self.S,
            "values": [self.x_prime.entries[i] for i in self.S],
            "recovered": self.R,
            "stats": self.stats,
        }
        return json.dumps(payload, indent=2)

    def write(self, path: str | Path) -> None:
        path = Path(path)
        if path.suffix == ".csv":
            lines = ["index,value"] + [f"{i},{self.x_prime.entries[i]!r}" for i in self.S]
            path.write_text("\n".join(lines) + "\n")
        else:
            path.write_text(self.to_json() + "\n")


def threshold_test(xhat_i: float, t_hat: float, p: Params) -> bool:
    """Keep a candidate iff xhat_i^2 >= (eps / 2k) * t_hat."""
    return xhat_i * xhat_i >= (p.eps / (2 * p.k)) * t_hat


def extract_candidate(residual: np.ndarray, code) -> int | None:
    """Decode the top-half-magnitude indicator of ``residual``.

    Ties in magnitude go to the lower position.
    """
    L = residual.shape[0]
    order = np.argsort(-np.abs(residual), kind="stable")
    y = np.zeros(L, dtype=np.uint8)
    y[order[: L // 2]] = 1
    return code.decode(y)


def recover(sketch: Sketch, tail_override: float | None = None, debug: bool = False) -> RecoveryOutput:
    """Run the decoder on a measured sketch.

    ``tail_override`` replaces the sketched tail estimate with a value on the
    ``||x_{-k}||^2 / k`` scale (see :func:`peelsketch.tail.oracle_tail`).
    With ``debug`` every maintained residual is checked against the
    recomputed reference after each step.
    """
    p = sketch.params
    bs = sketch.buckets
    cs = sketch.cs
    code = bs.code
    plan = bs.plan
    start = time.perf_counter()

    t_tilde = sketch.tail.query() if tail_override is None else float(tail_override)
    t_hat = p.k * t_tilde
    thresh = (p.eps / (2 * p.k)) * t_hat

    B = bs.B
    P = bs.q.copy()
    queue = deque(range(B))
    queued = np.ones(B, dtype=bool)
    R: dict[int, float] = {}
    iterations = 0
    decode_failures = 0
    wrong_bucket = 0
    below_threshold = 0

    while queue:
        v = queue.popleft()
        queued[v] = False
        iterations += 1
        i = extract_candidate(P[v], code)
        if i is None:
            decode_failures += 1
            continue
        if i in R:
            continue
        e_i = plan.edges([i])[0]
        if v not in e_i:
            wrong_bucket += 1
            continue
        xhat = cs.query(i)
        if not xhat * xhat >= thresh:
            below_threshold += 1
            continue
        R[i] = xhat
        contrib = xhat * bs.patterns([i])[0]
        for u in e_i.tolist():
            P[u] -= contrib
            if not queued[u]:
                queued[u] = True
                queue.append(u)
        if debug:
            for u in e_i.tolist():
                ref = bs.residual(u, R)
                assert np.allclose(P[u], ref, rtol=1e-9, atol=1e-9 * (1 + np.abs(ref).max())), u

    elapsed = time.perf_counter() - start
    if iterations > B + 2 * len(R):
        raise AssertionError(f"{iterations} iterations exceeds B + 2|R| = {B + 2 * len(R)}")

    order = sorted(R, key=lambda i: (-abs(R[i]), i))
    S = order[: min(3 * p.k, len(R))]
    x_prime = SparseApprox({i: R[i] for i in S}, bound=3 * p.k)
    stats = {
        "iterations": iterations,
        "successes": len(R),
        "decode_failures": decode_failures,
        "wrong_bucket": wrong_bucket,
        "below_threshold": below_threshold,
        "t_hat": t_hat,
        "wall_time": elapsed,
        "m": sketch.num_rows,
    }
    return RecoveryOutput(R=list(R), S=S, x_prime=x_prime, estimates=R, stats=stats)


def residual_ledger(sketch: Sketch, R: dict[int, float]) -> np.ndarray:
    """All bucket residuals for a given recovered map, recomputed from scratch."""
    return np.stack([sketch.buckets.residual(v, R) for v in range(sketch.buckets.B)])


# ---------------------------------------------------------------------------
# white-box analysis


def associated_hypergraph(x, sketch: Sketch) -> tuple[WeightedHypergraph, np.ndarray]:
    """Buckets as vertices, heavy coordinates as edges.

    Edge weight ``x_i^2`` for heavy i; vertex weight is the light energy
    hashed to the bucket.  Returns the graph and the heavy index of each edge.
    """
    p = sketch.params
    x = as_vector(x, p.n)
    cl = classify(x, p)
    heavy = np.array(sorted(cl.heavy), dtype=np.int64)
    is_heavy = np.zeros(p.n, dtype=bool)
    is_heavy[heavy] = True
    plan = sketch.buckets.plan
    vw = np.zeros(plan.B)
    light = np.flatnonzero(~is_heavy & (x != 0.0))
    step = 1 << 18
    for lo in range(0, light.shape[0], step):
        idx = light[lo : lo + step]
        e = plan.edges(idx)
        vw += np.bincount(e.reshape(-1), weights=np.repeat(x[idx] ** 2, plan.h), minlength=plan.B)
    edges = plan.edges(heavy) if heavy.size else np.zeros((0, plan.h), dtype=np.int64)
    G = WeightedHypergraph(plan.B, edges, x[heavy] ** 2, vw, plan.h)
    return G, heavy


@dataclass
class CrossCheckReport:
    heavy: int
    peelable: int
    peelable_recovered: int
    missed_top_mass_ratio: float
    recovered_outside_intermediate: int

    @property
    def peelable_recovered_fraction(self) -> float:
        return 1.0 if self.peelable == 0 else self.peelable_recovered / self.peelable


def recover_vs_peeling_crosscheck(x, sketch: Sketch, out: RecoveryOutput | None = None, rho: float | None = None) -> CrossCheckReport:
    """Compare the decoder's R with the rho-peelable edges of the associated hypergraph."""
    p = sketch.params
    x = as_vector(x, p.n)
    if out is None:
        out = recover(sketch)
    G, heavy = associated_hypergraph(x, sketch)
    res = peel(G, p.rho if rho is None else rho)
    R = set(out.R)
    peel_idx = [int(heavy[e]) for e in res.peelable]
    cl = classify(x, p)
    missed = [i for i in cl.top if i not in R]
    tail = tail_norm_sq(x, p.k)
    mass = float(np.sum(x[missed] ** 2)) if missed else 0.0
    ratio = (0.0 if mass == 0.0 else float("inf")) if tail == 0.0 else mass / tail
    return CrossCheckReport(
        heavy=len(heavy),
        peelable=len(peel_idx),
        peelable_recovered=sum(1 for i in peel_idx if i in R),
        missed_top_mass_ratio=ratio,
        recovered_outside_intermediate=len(R - cl.intermediate),
    )
