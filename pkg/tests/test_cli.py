"""End-to-end CLI runs in subprocesses: outputs, manifests, replay, exit codes."""

import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from lsvkit.ensembles import RADEMACHER, SeedSpec
from lsvkit.structure import small_ball_estimate


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "lsvkit", *map(str, args)],
                          capture_output=True, text=True, timeout=300)


# ---- tail -------------------------------------------------------------------

def test_tail_output_independent_of_worker_count(tmp_path):
    blobs = []
    for workers in (1, 2, 3, 8):
        out = tmp_path / f"tail_w{workers}.csv"
        r = run_cli("tail", "--ensemble", "gaussian", "--n", 4, "--n", 6,
                    "--k", 0.5, "--k", 2.0, "--trials", 40, "--seed", 7,
                    "--workers", workers, "--out", out)
        assert r.returncode == 0, r.stderr
        blobs.append(out.read_bytes())
    assert all(b == blobs[0] for b in blobs[1:])


def test_tail_manifest_and_warning_note(tmp_path):
    out = tmp_path / "tail.csv"
    r = run_cli("tail", "--ensemble", "gaussian", "--n", 4, "--k", 1.0,
                "--trials", 10, "--seed", 5, "--out", out)
    assert r.returncode == 0
    assert "outside the guaranteed range" in r.stderr  # K=1 < 2 on the upper tail
    manifest = json.loads((tmp_path / "tail.csv.manifest.json").read_text())
    assert manifest["command"] == "tail"
    assert manifest["master_seed"] == 5
    assert manifest["parameters"]["n_values"] == [4]
    assert manifest["outputs"] == [str(out)]
    assert isinstance(manifest["duration_seconds"], float)


def test_tail_lower_direction_holds_epsilon_in_k_column(tmp_path):
    out = tmp_path / "lower.csv"
    r = run_cli("tail", "--ensemble", "gaussian", "--n", 4, "--k", 0.05, "--k", 0.2,
                "--trials", 30, "--seed", 2, "--direction", "lower", "--out", out)
    assert r.returncode == 0
    assert "outside the guaranteed range" not in r.stderr
    rows = out.read_text().splitlines()[1:]
    assert [row.split(",")[2] for row in rows] == ["0.05", "0.2"]
    assert all(row.split(",")[3] == "lower" for row in rows)


def test_replay_reproduces_data_file_byte_for_byte(tmp_path):
    out = tmp_path / "tail.csv"
    r = run_cli("tail", "--ensemble", "rademacher", "--n", 4, "--k", 2.0,
                "--trials", 30, "--seed", 13, "--out", out)
    assert r.returncode == 0, r.stderr
    original = tmp_path / "tail.orig.csv"
    shutil.copy(out, original)
    out.unlink()
    r = run_cli("--replay", tmp_path / "tail.csv.manifest.json")
    assert r.returncode == 0, r.stderr
    assert out.read_bytes() == original.read_bytes()


# ---- witness ---------------------------------------------------------------

def test_witness_run_with_column_flag(tmp_path):
    out = tmp_path / "witness.json"
    r = run_cli("witness", "--ensemble", "gaussian", "--n", 5, "--trials", 6,
                "--seed", 1, "--column", 3, "--out", out)
    assert r.returncode == 0, r.stderr
    reports = json.loads(out.read_text())
    assert len(reports) == 6
    for rep in reports:
        assert rep["n"] == 5
        assert rep["column"] == 2  # report keeps the 0-based API index
        assert rep["violations"] == []
        assert rep["implied_bound"] >= rep["s_n"] - 1e-9
    manifest = json.loads((tmp_path / "witness.json.manifest.json").read_text())
    assert manifest["violations_total"] == 0
    assert manifest["singular_resamples"] == 0


# ---- lcd -------------------------------------------------------------------

def test_lcd_vector_mode_json(tmp_path):
    out = tmp_path / "lcd.json"
    r = run_cli("lcd", "--vector", "1,0", "--alpha", 10, "--gamma", 0.5,
                "--theta-max", 100, "--out", out)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    assert doc["mode"] == "vector"
    assert doc["unbounded"] is False
    assert doc["theta_star"] == pytest.approx(2.0 / 3.0, abs=1e-6)
    assert doc["certificate"] == [1, 0]
    assert doc["achieved_dist"] < 0.5 * doc["theta_star"] + doc["slack"]


def test_lcd_subspace_mode_json(tmp_path):
    out = tmp_path / "sub.json"
    r = run_cli("lcd", "--subspace-dim", 2, "--n", 4, "--samples", 3,
                "--seed", 9, "--theta-max", 50, "--out", out)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    assert doc["mode"] == "subspace"
    assert doc["n"] == 4 and doc["subspace_dim"] == 2 and doc["samples"] == 3
    assert doc["alpha"] == 1.0  # default sqrt(4)/2 resolved and recorded
    manifest = json.loads((tmp_path / "sub.json.manifest.json").read_text())
    assert manifest["parameters"]["alpha"] == 1.0
    if not doc["unbounded"]:
        assert len(doc["direction"]) == 4
        assert doc["theta_star"] > 0


# ---- smallball -------------------------------------------------------------

def test_smallball_json_matches_library(tmp_path):
    out = tmp_path / "sb.json"
    r = run_cli("smallball", "--weights", "1,1", "--ensemble", "rademacher",
                "--epsilon", 0.5, "--trials", 2000, "--seed", 10, "--out", out)
    assert r.returncode == 0, r.stderr
    doc = json.loads(out.read_text())
    w = np.array([1.0, 1.0]) / np.sqrt(2.0)
    est = small_ball_estimate(w, RADEMACHER, 0.5, 2000, SeedSpec(10, 0))
    assert doc["hits"] == est.hits
    assert doc["p_hat"] == pytest.approx(est.p_hat, rel=1e-9)
    assert doc["trials"] == 2000
    assert doc["weights"] == pytest.approx([w[0], w[1]], rel=1e-9)
    assert 0.4 < doc["p_hat"] < 0.6


# ---- exit codes and cleanup ---------------------------------------------------

def test_usage_errors_exit_2(tmp_path):
    cases = [
        # missing --out
        ["tail", "--ensemble", "gaussian", "--n", "4", "--k", "1", "--trials", "5"],
        # dimension below 2
        ["tail", "--ensemble", "gaussian", "--n", "1", "--k", "1",
         "--trials", "5", "--out", str(tmp_path / "a.csv")],
        # gamma outside (0,1)
        ["lcd", "--vector", "1,0", "--gamma", "1.5", "--out", str(tmp_path / "b.json")],
        # zero weight vector
        ["smallball", "--weights", "0,0", "--ensemble", "gaussian",
         "--epsilon", "0.5", "--trials", "5", "--out", str(tmp_path / "c.json")],
        # both lcd modes at once
        ["lcd", "--vector", "1,0", "--subspace-dim", "2", "--n", "4",
         "--out", str(tmp_path / "d.json")],
        # subspace mode without ambient dimension
        ["lcd", "--subspace-dim", "2", "--out", str(tmp_path / "e.json")],
        # column index out of range
        ["witness", "--ensemble", "gaussian", "--n", "4", "--trials", "2",
         "--column", "7", "--out", str(tmp_path / "f.json")],
        # no command at all
        [],
        # replay of a nonexistent manifest
        ["--replay", str(tmp_path / "missing.manifest.json")],
    ]
    for argv in cases:
        r = run_cli(*argv)
        assert r.returncode == 2, (argv, r.stderr)
    assert list(tmp_path.iterdir()) == []  # nothing may be left behind


def test_runtime_failure_exits_1_and_leaves_nothing(tmp_path):
    missing_dir = tmp_path / "no_such_dir"
    r = run_cli("tail", "--ensemble", "gaussian", "--n", 4, "--k", 1.0,
                "--trials", 5, "--out", missing_dir / "tail.csv")
    assert r.returncode == 1
    assert "error:" in r.stderr
    assert not missing_dir.exists()
    assert list(tmp_path.iterdir()) == []
