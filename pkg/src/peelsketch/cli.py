"""Command line front end.

    peelsketch gen       --n 16384 --k 10 --model exact-sparse --out x.bin
    peelsketch sketch    --vector x.bin --k 10 --eps 0.5 --out x.psks
    peelsketch recover   --sketch x.psks --out xprime.json
    peelsketch bench     --config exp.json --out metrics
    peelsketch verify    peeling
    peelsketch peel-sim  --N 3000 --M 10 --rho 4

Every command that builds a sketch accepts ``--config`` (an ExperimentConfig
JSON file), ``--seed`` and ``--profile``; explicit flags override the config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import PROFILES, ParameterError, read_vector, write_vector
from .decoder import recover
from .experiments import ExperimentConfig, consecutive_ratios, decode_time_sweep, run_experiment
from .peeling import census, mc_nonpeelable, peel, random_hypergraph, read_graph, spreadness, write_graph
from .signals import MODELS, generate
from .sketch import Sketch
from .tail import oracle_tail
from .verify import SUITES, run_suite

log = logging.getLogger("peelsketch")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    for name in ("n", "k", "eps", "c", "profile", "seed", "trials"):
        val = getattr(args, name, None)
        if val is not None:
            changes[name] = val
    model = cfg.model
    if getattr(args, "model", None):
        model = replace(model, kind=args.model)
    if getattr(args, "heads", None) is not None:
        model = replace(model, heads=args.heads)
    if getattr(args, "zipf_exponent", None) is not None:
        model = replace(model, zipf_exponent=args.zipf_exponent)
    return replace(cfg, model=model, **changes)


def _emit(obj, out: str | None) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=2, default=float)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(args) -> int:
    cfg = _config(args)
    x, planted = generate(cfg.model, cfg.n, cfg.k, cfg.eps, cfg.seed)
    write_vector(args.out, x)
    truth = {"config": cfg.to_dict(), "planted": planted.tolist()}
    Path(str(args.out) + ".truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    log.info("wrote %s (%d nonzeros)", args.out, int(np.count_nonzero(x)))
    return 0


def cmd_sketch(args) -> int:
    cfg = _config(args)
    x = read_vector(args.vector)
    if args.n is None and not args.config:
        cfg = replace(cfg, n=x.shape[0])
    sk = Sketch.of(x, cfg.params(cfg.seed))
    sk.save(args.out)
    log.info("wrote %s (m = %d rows)", args.out, sk.num_rows)
    return 0


def cmd_recover(args) -> int:
    sk = Sketch.load(args.sketch)
    tail = None
    if args.oracle_vector:
        tail = oracle_tail(read_vector(args.oracle_vector, sk.params.n), sk.params.k)
    out = recover(sk, tail_override=tail)
    if args.out:
        out.write(args.out)
    else:
        print(out.to_json())
    return 0


def cmd_bench(args) -> int:
    cfg = _config(args)
    if args.out:
        cfg = replace(cfg, metrics_csv=f"{args.out}.csv", metrics_json=f"{args.out}.jsonl")
    if args.sweep_k:
        times = decode_time_sweep(cfg, tuple(args.sweep_k))
        _emit({"config": cfg.to_dict(), "decode_seconds": times, "ratios": consecutive_ratios(times)}, None)
        return 0
    table = run_experiment(cfg)
    _emit({"config": cfg.to_dict(), "aggregate": table.aggregate()}, None)
    return 0


def cmd_verify(args) -> int:
    report = run_suite(args.suite, quick=args.quick)
    _emit(report.to_json(), args.out)
    for c in report.checks:
        log.info("%s  %s", "PASS" if c.passed else "FAIL", c.name)
    return 0 if report.passed else 1


def cmd_peel_sim(args) -> int:
    if args.graph:
        G = read_graph(args.graph)
    else:
        M = args.M if args.M is not None else int(args.N // (8 * args.rho * args.h**2))
        G = random_hypergraph(args.N, M, args.h, seed=args.seed)
    if args.save_graph:
        write_graph(args.save_graph, G)
    res = peel(G, args.rho)
    cen = census(G)
    D = [spreadness(G, e, args.rho) for e in range(G.M)]
    report = {
        "N": G.N,
        "M": G.M,
        "h": G.h,
        "rho": args.rho,
        "peelable": len(res.peelable),
        "sequence": list(res.sequence),
        "components": dict(Counter(str(c) for c in cen.classes)),
        "all_hypertree_or_unicyclic": cen.all_sparse,
        "mean_spreadness": float(np.mean(D)) if D else None,
    }
    if args.trials:
        mu = args.mu
        rep = mc_nonpeelable(
            G, lambda rng, T, N: rng.exponential(mu, size=(T, N)), mu, args.rho, args.trials, seed=args.seed
        )
        report["bound_violations"] = rep.violations(3.0).tolist()
        report["non_peelable_frequency"] = rep.frequency.tolist()
        report["bound"] = rep.bound.tolist()
    _emit(report, args.out)
    return 0


def _common(p: argparse.ArgumentParser, signal: bool = True) -> None:
    p.add_argument("--config", help="ExperimentConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--c", type=float)
    if signal:
        p.add_argument("--model", choices=MODELS)
        p.add_argument("--heads", type=int)
        p.add_argument("--zipf-exponent", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="peelsketch", description="Peeling-decoded l2/l2 sparse recovery sketch.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic signal")
    _common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sketch", help="sketch a vector file")
    _common(p, signal=False)
    p.add_argument("--vector", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("recover", help="decode a sketch file")
    p.add_argument("--sketch", required=True)
    p.add_argument("--oracle-vector", help="use the exact tail of this vector instead of the sketched estimate")
    p.add_argument("--out", help=".json or .csv; stdout if omitted")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("bench", help="run trials and emit metrics")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--sweep-k", type=int, nargs="+", help="decode-time sweep over these k")
    p.add_argument("--out", help="metrics prefix; appends to PREFIX.csv and PREFIX.jsonl")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--quick", action="store_true", help="reduced trial counts")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("peel-sim", help="peel a graph file or a random hypergraph")
    p.add_argument("--graph")
    p.add_argument("--save-graph")
    p.add_argument("--N", type=int, default=3000)
    p.add_argument("--M", type=int)
    p.add_argument("--h", type=int, default=3)
    p.add_argument("--rho", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=0, help="Monte Carlo trials with exponential vertex weights")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_peel_sim)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ParameterError, OSError) as exc:
        print(f"peelsketch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
