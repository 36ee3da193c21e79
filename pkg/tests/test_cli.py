"""CLI: configs, exit codes, artifacts, determinism."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from thermoqm.cli import main


def run_cli(args):
    return main(args)


def test_sft_validate(tmp_path):
    out = tmp_path / "o"
    code = run_cli([
        "sft-validate", "--json", json.dumps({"sft": {"builtin": "golden_mean"}}),
        "--out", str(out),
    ])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["M"] == 2
    assert summary["periodic_counts"][:3] == [1, 3, 4]
    assert (out / "timing.json").exists()


def test_words_op_and_resource_limit(tmp_path):
    code = run_cli([
        "words", "--json", json.dumps({"sft": {"builtin": "golden_mean"}, "n": 6}),
        "--out", str(tmp_path / "w"),
    ])
    assert code == 0
    text = (tmp_path / "w" / "words.csv").read_text()
    assert len(text.strip().splitlines()) == 1 + 21  # |W_6| = 21 on golden mean
    code = run_cli([
        "words", "--json",
        json.dumps({"sft": {"builtin": "full_shift", "d": 2}, "n": 12}),
        "--out", str(tmp_path / "w2"), "--cap", "100",
    ])
    assert code == 3
    os.environ.pop("THERMOQM_MAX_WORDS", None)


def test_invalid_inputs_exit_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json {")
    assert run_cli(["pressure", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert run_cli([
        "clt", "--json",
        json.dumps({"sft": {"builtin": "full_shift", "d": 2}, "qm": {"kind": "zero"},
                    "n": 10, "trials": 0, "seed": 1}),
        "--out", str(tmp_path / "y"),
    ]) == 2
    # unknown keys are rejected
    assert run_cli([
        "pressure", "--json",
        json.dumps({"sft": {"builtin": "golden_mean"}, "qm": {"kind": "zero"},
                    "n_max": 8, "bogus": 1}),
        "--out", str(tmp_path / "z"),
    ]) == 2


def test_threshold_failure_exits_one(tmp_path):
    code = run_cli([
        "livsic", "--json",
        json.dumps({
            "sft": {"builtin": "full_shift", "d": 2},
            "qm": {"kind": "pattern_count", "pattern": "12"},
            "qm2": {"kind": "pattern_count", "pattern": "21"},
            "n_max": 8,
            "expect": "distinct",
        }),
        "--out", str(tmp_path / "l"),
    ])
    assert code == 1


def test_seed_override(tmp_path):
    cfg = {"sft": {"builtin": "full_shift", "d": 2},
           "qm": {"kind": "letter_weights", "weights": [0.5, -0.5]},
           "n": 200, "trials": 400, "seed": 1}
    run_cli(["clt", "--json", json.dumps(cfg), "--out", str(tmp_path / "a")])
    run_cli(["clt", "--json", json.dumps(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    sa = json.loads((tmp_path / "a" / "summary.json").read_text())
    sb = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert sa["clt"]["seed"] == 1 and sb["clt"]["seed"] == 2
    assert sa["clt"]["ks"] != sb["clt"]["ks"]


SUITE = {
    "runs": [
        {
            "name": "pressure-golden",
            "op": "pressure",
            "config": {"sft": {"builtin": "golden_mean"}, "qm": {"kind": "zero"},
                       "n_max": 12, "thresholds": {"contains": 0.4812118250596035}},
        },
        {
            "name": "clt-small",
            "op": "clt",
            "config": {"sft": {"builtin": "full_shift", "d": 2},
                       "qm": {"kind": "letter_weights", "weights": [0.5, -0.5]},
                       "n": 256, "trials": 512, "seed": 5},
        },
        {
            "name": "spherical-small",
            "op": "spherical",
            "config": {"rank": 2, "pattern": "ab", "n": 128, "count": 512, "seed": 6},
        },
    ]
}


def collect_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in sorted(files):
            if name == "timing.json":
                continue
            path = os.path.join(dirpath, name)
            out[os.path.relpath(path, root)] = open(path, "rb").read()
    return out


def test_suite_runs_and_is_deterministic_across_workers(tmp_path):
    m = tmp_path / "manifest.json"
    m.write_text(json.dumps(SUITE))
    outs = []
    for i, workers in enumerate((1, 2, 1)):
        out = tmp_path / f"run{i}"
        code = run_cli(["suite", "--config", str(m), "--out", str(out),
                        "--workers", str(workers)])
        assert code == 0
        outs.append(collect_bytes(out))
    assert outs[0] == outs[1] == outs[2]


def test_empty_suite(tmp_path):
    m = tmp_path / "empty.json"
    m.write_text(json.dumps({"runs": []}))
    assert run_cli(["suite", "--config", str(m), "--out", str(tmp_path / "e")]) == 0
    table = (tmp_path / "e" / "table.csv").read_text()
    assert table.strip() == "name,op,exit_code,pass"


def test_suite_propagates_failure(tmp_path):
    m = tmp_path / "m.json"
    m.write_text(json.dumps({
        "runs": [
            {"name": "bad-livsic", "op": "livsic",
             "config": {"sft": {"builtin": "full_shift", "d": 2},
                        "qm": {"kind": "pattern_count", "pattern": "12"},
                        "qm2": {"kind": "pattern_count", "pattern": "21"},
                        "n_max": 6, "expect": "distinct"}},
        ]
    }))
    assert run_cli(["suite", "--config", str(m), "--out", str(tmp_path / "s")]) == 1


def test_measure_and_potential_parsing(tmp_path):
    # potential extracted from an orbit-ensemble Gibbs measure
    code = run_cli([
        "potential", "--json",
        json.dumps({
            "sft": {"builtin": "full_shift", "d": 2},
            "measure": {"kind": "gibbs_orbit",
                        "qm": {"kind": "pattern_count", "pattern": "12"},
                        "N": 10, "depth": 3},
            "depth": 3,
        }),
        "--out", str(tmp_path / "pot"),
    ])
    assert code == 0
    dump = json.loads((tmp_path / "pot" / "potential.json").read_text())
    assert dump["depth"] == 3 and len(dump["values"]) == 8
    # entropy of a bernoulli measure against its closed form
    code = run_cli([
        "entropy", "--json",
        json.dumps({
            "sft": {"builtin": "full_shift", "d": 2},
            "measure": {"kind": "bernoulli", "p": [0.3, 0.7], "depth": 6},
            "depth": 6,
            "oracle": -(0.3 * np.log(0.3) + 0.7 * np.log(0.7)),
            "tolerance": 1e-09,
        }),
        "--out", str(tmp_path / "ent"),
    ])
    assert code == 0


def test_variance_with_explicit_psi(tmp_path):
    code = run_cli([
        "variance", "--json",
        json.dumps({
            "sft": {"builtin": "full_shift", "d": 2},
            "psi": {"memory": 1, "values": {"1": 0.5, "2": -0.5}},
            "expect_sigma2": 0.25,
            "expect_tol": 1e-12,
        }),
        "--out", str(tmp_path / "v"),
    ])
    assert code == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "thermoqm.cli", "sft-validate", "--json",
         json.dumps({"sft": {"builtin": "full_shift", "d": 3}}),
         "--out", str(tmp_path / "cli")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0


def test_env_cap_respected(tmp_path, monkeypatch):
    monkeypatch.setenv("THERMOQM_MAX_WORDS", "10")
    code = run_cli([
        "words", "--json",
        json.dumps({"sft": {"builtin": "full_shift", "d": 2}, "n": 5}),
        "--out", str(tmp_path / "cap"),
    ])
    assert code == 3
