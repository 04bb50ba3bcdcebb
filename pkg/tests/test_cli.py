from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from peelsketch.cli import main
from peelsketch.core import ParameterError, read_vector
from peelsketch.experiments import (
    METRIC_FIELDS,
    ExperimentConfig,
    append_csv,
    consecutive_ratios,
    read_jsonl,
    run_experiment,
)
from peelsketch.signals import SignalModel


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig(n=4096, k=3, model=SignalModel("zipf", zipf_exponent=1.5), overrides={"h": 2})
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert ExperimentConfig.load(path) == cfg
    with pytest.raises(ParameterError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ParameterError):
        ExperimentConfig(tail_mode="psychic")


def test_zero_signal_is_exact():
    table = run_experiment(ExperimentConfig(n=1024, k=2, model=SignalModel("zero"), trials=3, timing_reps=1))
    assert table.column("error_ratio") == ["exact"] * 3
    assert table.aggregate()["exact"] == 3


def test_metrics_rows_and_append(tmp_path):
    cfg = ExperimentConfig(
        n=2048, k=2, trials=2, timing_reps=1,
        metrics_csv=str(tmp_path / "m.csv"), metrics_json=str(tmp_path / "m.jsonl"),
    )
    table = run_experiment(cfg)
    run_experiment(cfg)
    rows = list(csv.DictReader(open(tmp_path / "m.csv")))
    assert len(rows) == 4 and tuple(rows[0]) == METRIC_FIELDS
    assert [r["seed"] for r in rows] == ["0", "1", "0", "1"]
    assert read_jsonl(tmp_path / "m.jsonl")[1] == json.loads(json.dumps(table.rows[1]))
    r = table.rows[0]
    assert r["schema"] == 1 and r["output_size"] <= 3 * 2 and r["recovered"] >= r["output_size"]
    (tmp_path / "other.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ParameterError):
        append_csv(tmp_path / "other.csv", table.rows)


def test_consecutive_ratios():
    assert consecutive_ratios({8: 1.0, 16: 2.0, 32: 5.0}) == [2.0, 2.5]


def test_gen_sketch_recover_round_trip(tmp_path):
    vec, vec2 = tmp_path / "x.bin", tmp_path / "y.bin"
    common = ["--n", "4096", "--k", "4", "--eps", "0.5", "--seed", "7"]
    assert main(["gen", *common, "--model", "exact-sparse", "--out", str(vec)]) == 0
    assert main(["gen", *common, "--model", "exact-sparse", "--out", str(vec2)]) == 0
    assert vec.read_bytes() == vec2.read_bytes()
    truth = json.loads((tmp_path / "x.bin.truth.json").read_text())
    x = read_vector(vec)
    assert truth["planted"] == np.flatnonzero(x).tolist()
    sk = tmp_path / "x.psks"
    assert main(["sketch", *common, "--vector", str(vec), "--out", str(sk)]) == 0
    out = tmp_path / "o.json"
    assert main(["recover", "--sketch", str(sk), "--oracle-vector", str(vec), "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    got = dict(zip(d["indices"], d["values"]))
    assert {i for i, v in got.items() if v != 0} == set(truth["planted"])
    assert all(got[i] == x[i] for i in truth["planted"])


def test_config_file_drives_commands(tmp_path):
    cfg = ExperimentConfig(n=2048, k=2, eps=0.5, seed=3, model=SignalModel("exact-sparse"), trials=1, timing_reps=1)
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert main(["gen", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 0
    assert np.count_nonzero(read_vector(tmp_path / "x.csv")) == 2
    assert main(["bench", "--config", str(path), "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m.csv").exists() and (tmp_path / "m.jsonl").exists()


def test_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "code", "--quick", "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["passed"] is True
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nope"])
    assert exc.value.code != 0


def test_peel_sim(tmp_path, capsys):
    g = tmp_path / "g.txt"
    assert main(["peel-sim", "--N", "200", "--M", "10", "--save-graph", str(g), "--trials", "100"]) == 0
    first = json.loads(capsys.readouterr().out)
    assert first["M"] == 10 and first["bound_violations"] == []
    assert main(["peel-sim", "--graph", str(g)]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["peelable"] == first["peelable"] and again["sequence"] == first["sequence"]


def test_bad_input_reports_error(tmp_path, capsys):
    assert main(["sketch", "--vector", str(tmp_path / "missing.bin"), "--out", str(tmp_path / "s")]) == 2
    assert "error" in capsys.readouterr().err
