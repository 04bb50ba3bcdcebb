"""Reproducible experiment configs, per-trial metrics and scaling sweeps.

A config fixes everything a run depends on; trial t uses seed ``seed + t``
for both the signal and the sketch hashes.  Metrics files carry a schema
version and can be appended to by later runs.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .core import EXACT, ParameterError, Params, error_ratio, get_profile, top_indices
from .decoder import RecoveryOutput, recover
from .signals import SignalModel, generate
from .sketch import Sketch
from .tail import oracle_tail

SCHEMA_VERSION = 1
METRIC_FIELDS = (
    "schema",
    "trial",
    "seed",
    "n",
    "k",
    "eps",
    "profile",
    "model",
    "error_ratio",
    "recovered",
    "output_size",
    "top_mass_fraction",
    "m",
    "max_column_sparsity",
    "decode_seconds",
)


@dataclass
class ExperimentConfig:
    n: int = 1 << 14
    k: int = 10
    eps: float = 0.5
    c: float = 2.0
    profile: str = "practical"
    model: SignalModel = field(default_factory=SignalModel)
    trials: int = 10
    seed: int = 0
    tail_mode: str = "sketch"  # or "oracle"
    overrides: dict[str, Any] = field(default_factory=dict)
    timing_reps: int = 5
    workers: int = 1
    metrics_csv: str | None = None
    metrics_json: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.model, dict):
            self.model = SignalModel(**self.model)
        if self.tail_mode not in ("sketch", "oracle"):
            raise ParameterError(f"tail_mode must be 'sketch' or 'oracle', got {self.tail_mode!r}")
        if self.trials < 0 or self.timing_reps < 1 or self.workers < 1:
            raise ParameterError("trials >= 0, timing_reps >= 1 and workers >= 1 required")
        get_profile(self.profile)
        self.params(self.seed)  # validate eagerly

    def params(self, seed: int) -> Params:
        return Params.from_profile(self.n, self.k, self.eps, c=self.c, profile=self.profile, seed=seed, **self.overrides)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExperimentConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ParameterError(f"{path}: invalid JSON ({exc})") from None


def timed_recover(sketch: Sketch, tail_override: float | None, reps: int) -> tuple[RecoveryOutput, float]:
    """Decode ``reps`` times; return the last output and the median wall time."""
    times = []
    out = None
    for _ in range(reps):
        t0 = time.perf_counter()
        out = recover(sketch, tail_override=tail_override)
        times.append(time.perf_counter() - t0)
    return out, float(np.median(times))


def run_trial(cfg: ExperimentConfig, trial: int) -> dict[str, Any]:
    seed = cfg.seed + trial
    p = cfg.params(seed)
    x, _ = generate(cfg.model, p.n, p.k, p.eps, seed)
    sk = Sketch.of(x, p)
    tail = oracle_tail(x, p.k) if cfg.tail_mode == "oracle" else None
    out, dt = timed_recover(sk, tail, cfg.timing_reps)
    top = top_indices(x, p.k)
    top_mass = float(np.sum(x[top] ** 2))
    hit = [i for i in top.tolist() if i in out.x_prime.entries]
    ratio = error_ratio(x, out.x_prime, p.k)
    return {
        "schema": SCHEMA_VERSION,
        "trial": trial,
        "seed": seed,
        "n": p.n,
        "k": p.k,
        "eps": p.eps,
        "profile": p.profile,
        "model": cfg.model.kind,
        "error_ratio": ratio,
        "recovered": len(out.R),
        "output_size": len(out.S),
        "top_mass_fraction": 1.0 if top_mass == 0.0 else float(np.sum(x[hit] ** 2)) / top_mass,
        "m": sk.num_rows,
        "max_column_sparsity": int(sk.column_sparsity(np.arange(p.n)).max()),
        "decode_seconds": dt,
    }


@dataclass
class MetricsTable:
    rows: list[dict[str, Any]]

    def column(self, name: str) -> list[Any]:
        return [r[name] for r in self.rows]

    def aggregate(self, qs=(0.5, 0.9, 0.99)) -> dict[str, Any]:
        ratios = [r for r in self.column("error_ratio") if r != EXACT]
        agg: dict[str, Any] = {"trials": len(self.rows), "exact": len(self.rows) - len(ratios)}
        for name, vals in (
            ("error_ratio", ratios),
            ("decode_seconds", self.column("decode_seconds")),
            ("top_mass_fraction", self.column("top_mass_fraction")),
        ):
            if vals:
                agg[name] = {str(q): float(np.quantile(vals, q)) for q in qs}
        return agg


def run_experiment(cfg: ExperimentConfig) -> MetricsTable:
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        rows = [run_trial(cfg, t) for t in range(cfg.trials)]
    table = MetricsTable(rows)
    if cfg.metrics_csv:
        append_csv(cfg.metrics_csv, rows)
    if cfg.metrics_json:
        append_jsonl(cfg.metrics_json, rows)
    return table


def append_csv(path: str | Path, rows: list[dict[str, Any]]) -> None:
    """Append rows; the header is written once and must match on later appends."""
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    if not fresh:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), [])
        if tuple(header) != METRIC_FIELDS:
            raise ParameterError(f"{path}: existing header does not match metrics schema v{SCHEMA_VERSION}")
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=METRIC_FIELDS)
        if fresh:
            w.writeheader()
        w.writerows(rows)
        fh.flush()
        os.fsync(fh.fileno())


def append_jsonl(path: str | Path, rows: list[dict[str, Any]]) -> None:
    with open(path, "a") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    return [json.loads(ln) for ln in Path(path).read_text().splitlines() if ln.strip()]


def decode_time_sweep(cfg: ExperimentConfig, ks=(8, 16, 32, 64)) -> dict[int, float]:
    """Median decode time per k, pooled over the config's trials."""
    out = {}
    for k in ks:
        table = run_experiment(replace(cfg, k=k, metrics_csv=None, metrics_json=None))
        out[k] = float(np.median(table.column("decode_seconds")))
    return out


def consecutive_ratios(times: dict[int, float]) -> list[float]:
    ks = sorted(times)
    return [times[b] / times[a] if times[a] > 0 else math.inf for a, b in zip(ks, ks[1:])]
