"""Monte Carlo and exhaustive property suites, shared by the CLI and the tests.

Each measurement function returns raw numbers; ``run_suite`` turns a set of
them into a pass/fail report with configured trial counts.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from .code import BalancedCode
from .core import EXACT, ParameterError, Params, error_ratio, tail_norm_sq
from .count_sketch import CountSketch
from .decoder import recover, recover_vs_peeling_crosscheck
from .peeling import (
    WeightedHypergraph,
    census,
    mc_nonpeelable,
    peel,
    random_edges,
    random_hypergraph,
    spreadness,
)
from .signals import SignalModel, generate
from .sketch import Sketch
from .tail import TailSketch, oracle_tail

# ---------------------------------------------------------------------------
# count-sketch


def countsketch_decay(n=4096, rows=40, buckets=512, trials=10_000, lams=(1, 2, 4, 8), seed=0, kind="gauss") -> dict:
    """Frequency of ``|x_i - xhat_i|^2 > (lam/r) * ||x_{-s}||^2 / s`` over fresh sketches.

    Each trial draws a new signal, a new sketch seed and one query index.
    """
    lams = np.asarray(lams, dtype=np.float64)
    hits = np.zeros(lams.shape[0])
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        if kind == "gauss":
            x = rng.standard_normal(n)
        elif kind == "laplace":
            x = rng.laplace(size=n)
        else:
            raise ParameterError(f"unknown signal kind {kind!r}")
        cs = CountSketch(n, rows, buckets, seed=int(rng.integers(1 << 62)))
        cs.measure(x)
        i = int(rng.integers(n))
        err = (cs.query(i) - x[i]) ** 2
        hits += err > lams / rows * tail_norm_sq(x, buckets) / buckets
    freq = hits / trials
    bound = 2 * np.exp(-lams)
    return {
        "lambda": lams.tolist(),
        "frequency": freq.tolist(),
        "bound": bound.tolist(),
        "sigma": np.sqrt(np.clip(bound, 0, 1) * (1 - np.clip(bound, 0, 1)) / trials).tolist(),
        "trials": trials,
    }


# ---------------------------------------------------------------------------
# code


def code_roundtrip_failures(code: BalancedCode, chunk: int = 4096) -> list[int]:
    """Indices whose clean codeword does not decode back to themselves."""
    bad = []
    for lo in range(0, code.n, chunk):
        idx = np.arange(lo, min(code.n, lo + chunk))
        words = code.encode_many(idx)
        for i, w in zip(idx.tolist(), words):
            if code.decode(w) != i:
                bad.append(i)
    return bad


def code_corruption_rate(code: BalancedCode, flip_fraction: float, trials: int, seed=0) -> float:
    """Decode success rate with ``round(flip_fraction * L)`` random positions flipped."""
    rng = np.random.default_rng(seed)
    flips = int(round(flip_fraction * code.L))
    ok = 0
    for _ in range(trials):
        i = int(rng.integers(code.n))
        w = code.encode(i).copy()
        pos = rng.choice(code.L, size=flips, replace=False)
        w[pos] ^= 1
        ok += code.decode(w) == i
    return ok / trials


def code_balance_range(code: BalancedCode, chunk: int = 4096) -> tuple[float, float]:
    lo_f, hi_f = 1.0, 0.0
    for lo in range(0, code.n, chunk):
        frac = code.encode_many(np.arange(lo, min(code.n, lo + chunk))).mean(axis=1)
        lo_f, hi_f = min(lo_f, float(frac.min())), max(hi_f, float(frac.max()))
    return lo_f, hi_f


# ---------------------------------------------------------------------------
# tail


def tail_sandwich(n=1 << 14, k=16, c=2.0, seeds=range(200), profile="practical", exponent=1.0) -> dict:
    """Count seeds where ``||x_{-ck}||^2/(ck) <= t <= ||x_{-k}||^2/k`` on Zipf signals."""
    model = SignalModel("zipf", zipf_exponent=exponent)
    held = 0
    ratios = []
    seeds = list(seeds)
    for s in seeds:
        p = Params.from_profile(n, k, 0.5, c=c, profile=profile, seed=s)
        x, _ = generate(model, n, k, p.eps, s)
        ts = TailSketch.from_params(p)
        ts.measure(x)
        t = ts.query()
        ck = p.ck
        lo = tail_norm_sq(x, ck) / ck
        hi = tail_norm_sq(x, k) / k
        held += lo <= t <= hi
        ratios.append(t / hi if hi > 0 else math.nan)
    return {"held": int(held), "seeds": len(seeds), "median_ratio": float(np.nanmedian(ratios))}


# ---------------------------------------------------------------------------
# peeling


def brute_force_peelable(G: WeightedHypergraph, rho: float) -> set[int]:
    """Edges appearing in some valid removal sequence, by search over removed-sets.

    Freeness is evaluated straight from the edge list so this does not share
    code with the greedy peeler.
    """
    edges = [set(row) for row in G.edges.tolist()]
    w = G.edge_weights.tolist()
    vw = G.vertex_weights.tolist()

    def free(e: int, removed: frozenset) -> bool:
        for v in edges[e]:
            load = vw[v] + sum(w[f] for f in range(len(edges)) if f != e and f not in removed and v in edges[f])
            if w[e] >= rho * load:
                return True
        return False

    seen = {frozenset()}
    stack = [frozenset()]
    reach: set[int] = set()
    while stack:
        removed = stack.pop()
        for e in range(len(edges)):
            if e in removed or not free(e, removed):
                continue
            reach.add(e)
            nxt = removed | {e}
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return reach


def small_random_graph(rng: np.random.Generator, max_edges=5, max_vertices=9, h=3) -> tuple[WeightedHypergraph, float]:
    N = int(rng.integers(h, max_vertices + 1))
    M = int(rng.integers(0, max_edges + 1))
    edges = random_edges(N, M, h, rng)
    ew = rng.exponential(size=M) * rng.choice([1.0, 10.0], size=M)
    vw = rng.exponential(size=N) * rng.choice([0.0, 0.1, 1.0])
    rho = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
    return WeightedHypergraph(N, edges, ew, vw, h), rho


def peel_oracle_mismatches(instances=1000, seed=0) -> list[int]:
    rng = np.random.default_rng(seed)
    bad = []
    for t in range(instances):
        G, rho = small_random_graph(rng)
        if set(peel(G, rho).peelable) != brute_force_peelable(G, rho):
            bad.append(t)
    return bad


def peel_order_mismatches(instances=100, orders=20, seed=0, N=300, M=80, h=3) -> list[int]:
    rng = np.random.default_rng(seed)
    bad = []
    for t in range(instances):
        edges = random_edges(N, M, h, rng)
        G = WeightedHypergraph(N, edges, rng.exponential(size=M), rng.exponential(size=N) * 0.05, h)
        ref = set(peel(G, 2.0).peelable)
        if any(set(peel(G, 2.0, rng=np.random.default_rng([seed, t, o])).peelable) != ref for o in range(orders)):
            bad.append(t)
    return bad


def spreadness_mean(N=3000, h=3, rho=4.0, seeds=range(1000)) -> dict:
    M = int(N // (8 * rho * h * h))
    D = []
    for s in seeds:
        G = random_hypergraph(N, M, h, seed=s)
        D.extend(spreadness(G, e, rho) for e in range(G.M))
    D = np.asarray(D)
    return {"M": M, "mean": float(D.mean()), "sigma": float(D.std(ddof=1) / math.sqrt(D.size)), "edges": int(D.size)}


def component_census(N=10_000, h=3, seeds=range(100), M: int | None = None) -> dict:
    M = N // (2 * h) if M is None else M
    ok = sum(census(random_hypergraph(N, M, h, seed=s)).all_sparse for s in seeds)
    return {"M": M, "all_sparse": int(ok), "seeds": len(list(seeds))}


def peeling_bound_instances(instances=10, trials=10_000, rho=4.0, mu=1.0, seed=0, N=40, M=8, h=3) -> dict:
    """Per-edge non-peelable frequency vs ``mu * D(e) / w_e`` on sparse random instances."""
    rng = np.random.default_rng(seed)
    measured = 0
    violations = 0
    worst = 0.0
    done = 0
    while done < instances:
        G0 = random_hypergraph(N, M, h, seed=rng.integers(1 << 62))
        if not census(G0).all_sparse:
            continue
        ew = rng.uniform(rho, 10 * rho, size=G0.M)
        G = WeightedHypergraph(N, G0.edges, ew, np.zeros(N), h)
        rep = mc_nonpeelable(
            G, lambda r, T, n: r.exponential(mu, size=(T, n)), mu, rho, trials, seed=rng.integers(1 << 62)
        )
        measured += int(rep.eligible.sum())
        violations += len(rep.violations(3.0))
        live = rep.eligible & (rep.bound > 0)
        if live.any():
            worst = max(worst, float(np.max(rep.frequency[live] / rep.bound[live])))
        done += 1
    return {"instances": instances, "edges": measured, "violations": violations, "worst_ratio": worst}


# ---------------------------------------------------------------------------
# end to end


def exact_sparse_trials(n=1 << 14, k=10, eps=0.5, seeds=range(100), profile="practical", **overrides) -> dict:
    exact = 0
    seeds = list(seeds)
    for s in seeds:
        p = Params.from_profile(n, k, eps, profile=profile, seed=s, **overrides)
        x, pos = generate(SignalModel("exact-sparse"), n, k, eps, s)
        out = recover(Sketch.of(x, p), tail_override=oracle_tail(x, k))
        dense = out.x_prime.to_dense(n)
        exact += out.x_prime.support == set(pos.tolist()) and float(np.max(np.abs(dense - x))) <= 1e-9
    return {"exact": int(exact), "seeds": len(seeds)}


def planted_trials(n=1 << 16, k=8, eps=0.25, seeds=range(100), profile="practical", model=None, **overrides) -> dict:
    """Error ratios plus the peeling cross-check on planted sparse-plus-Gaussian signals."""
    model = model or SignalModel("sparse-plus-gaussian")
    ratios, peelable, peeled_hit = [], 0, 0
    seeds = list(seeds)
    for s in seeds:
        p = Params.from_profile(n, k, eps, profile=profile, seed=s, **overrides)
        x, _ = generate(model, n, k, eps, s)
        sk = Sketch.of(x, p)
        out = recover(sk)
        r = error_ratio(x, out.x_prime, k)
        ratios.append(0.0 if r == EXACT else float(r))
        cc = recover_vs_peeling_crosscheck(x, sk, out)
        peelable += cc.peelable
        peeled_hit += cc.peelable_recovered
    return {"ratios": ratios, "peelable": peelable, "peelable_recovered": peeled_hit}


# ---------------------------------------------------------------------------
# suites


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)


@dataclass
class SuiteReport:
    suite: str
    checks: list[Check]
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> str:
        d = {"suite": self.suite, "passed": self.passed, "seconds": self.seconds, "checks": [asdict(c) for c in self.checks]}
        return json.dumps(d, indent=2, default=float)


def _suite_peeling(quick: bool) -> list[Check]:
    bad = peel_oracle_mismatches(200 if quick else 1000)
    orders = peel_order_mismatches(20 if quick else 100)
    sp = spreadness_mean(seeds=range(100 if quick else 1000))
    cen = component_census(seeds=range(20 if quick else 100))
    pb = peeling_bound_instances(instances=3 if quick else 10, trials=2000 if quick else 10_000)
    return [
        Check("greedy equals exhaustive-order search", not bad, {"mismatches": bad}),
        Check("order independence", not orders, {"mismatches": orders}),
        Check("spreadness mean <= rho + 1 + 3 sigma", sp["mean"] <= 5.0 + 3 * sp["sigma"], sp),
        Check("components hypertree/unicyclic in >= 95%", cen["all_sparse"] >= 0.95 * cen["seeds"], cen),
        Check("non-peelable frequency within bound + 3 sigma", pb["violations"] == 0, pb),
    ]


def _suite_count_sketch(quick: bool) -> list[Check]:
    d = countsketch_decay(trials=1000 if quick else 10_000)
    f, b, sg = (np.asarray(d[key]) for key in ("frequency", "bound", "sigma"))
    return [
        Check("tail below 2 exp(-lambda) + 5 sigma", bool(np.all(f <= b + 5 * sg)), d),
        Check("tail strictly decreasing in lambda", bool(np.all(np.diff(f) < 0)), d),
    ]


def _suite_code(quick: bool) -> list[Check]:
    n = 1 << (12 if quick else 16)
    code = BalancedCode(16 * (n - 1).bit_length(), n, seed=0)
    bad = code_roundtrip_failures(code)
    rate = code_corruption_rate(code, 1 / 32, 2000 if quick else 20_000)
    lo, hi = code_balance_range(code)
    return [
        Check("exhaustive round trip", not bad, {"n": n, "failures": bad[:10]}),
        Check("decode success >= 99% at 1/32 flips", rate >= 0.99, {"rate": rate}),
        Check("ones fraction in [7/16, 9/16]", lo >= 7 / 16 and hi <= 9 / 16, {"min": lo, "max": hi}),
    ]


def _suite_tail(quick: bool) -> list[Check]:
    d = tail_sandwich(seeds=range(50 if quick else 200))
    return [Check("sandwich holds in >= 45% of seeds", d["held"] >= 0.45 * d["seeds"], d)]


def _suite_end_to_end(quick: bool) -> list[Check]:
    ex = exact_sparse_trials(seeds=range(20 if quick else 100))
    pl = planted_trials(seeds=range(10 if quick else 100))
    r = np.asarray(pl["ratios"])
    frac = 1.0 if pl["peelable"] == 0 else pl["peelable_recovered"] / pl["peelable"]
    return [
        Check("exact-sparse recovered exactly in >= 99%", ex["exact"] >= 0.99 * ex["seeds"], ex),
        Check("planted error ratio <= 2 in >= 90%", float(np.mean(r <= 2.0)) >= 0.9, {"max": float(r.max())}),
        Check("peelable heavy edges recovered >= 99%", frac >= 0.99, {"fraction": frac}),
    ]


SUITES: dict[str, Callable[[bool], list[Check]]] = {
    "peeling": _suite_peeling,
    "count-sketch": _suite_count_sketch,
    "code": _suite_code,
    "tail": _suite_tail,
    "end-to-end": _suite_end_to_end,
}


def run_suite(name: str, quick: bool = False) -> SuiteReport:
    if name not in SUITES:
        raise ParameterError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    t0 = time.perf_counter()
    checks = SUITES[name](quick)
    return SuiteReport(name, checks, time.perf_counter() - t0)

