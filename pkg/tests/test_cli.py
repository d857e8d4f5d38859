"""Command-line workflows: artifacts, manifests, determinism, exit codes."""

import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from gdfkit import cli
from gdfkit.data import bundled


def write_blobs_csv(path, n_per=60, seed=130):
    rng = np.random.default_rng(seed)
    pts = np.concatenate(
        [
            rng.normal(loc=(-2.0, 0.0), scale=0.35, size=(n_per, 2)),
            rng.normal(loc=(2.0, 0.0), scale=0.35, size=(n_per, 2)),
        ]
    )
    wts = rng.uniform(0.5, 1.5, size=2 * n_per)
    rows = "\n".join(
        f"{p[0]:.17g},{p[1]:.17g},{w:.17g}" for p, w in zip(pts, wts)
    )
    path.write_text(rows + "\n")


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# happy paths


def test_estimate_writes_grid_and_manifest(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    out = tmp_path / "run"
    rc = cli.main(
        ["estimate", str(src), "--bandwidth", "0.5", "--grid", "16", "--out", str(out)]
    )
    assert rc == 0
    grid = (out / "grid.csv").read_text().strip().splitlines()
    assert grid[0].startswith("x0,x1,value,grad_norm,lambda1,lambda2")
    assert len(grid) == 1 + 16 * 16
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "estimate"
    assert manifest["config"]["bandwidth"] == 0.5
    assert manifest["inputs"][0]["sha256"] == sha256(src)
    assert "grid.csv" in manifest["outputs"]


def test_modes_and_cluster_outputs(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    out = tmp_path / "run"
    rc = cli.main(["cluster", str(src), "--bandwidth", "0.5", "--out", str(out)])
    assert rc == 0
    modes = (out / "modes.csv").read_text().strip().splitlines()
    assert len(modes) == 3  # header plus two modes
    labels = (out / "labels.csv").read_text().strip().splitlines()
    assert len(labels) == 1 + 120
    lab = np.array([int(r.split(",")[-1]) for r in labels[1:]])
    assert set(np.unique(lab)) == {0, 1}


def test_connectivity_outputs(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    out = tmp_path / "run"
    rc = cli.main(["connectivity", str(src), "--bandwidth", "0.5", "--out", str(out)])
    assert rc == 0
    for name in ("modes.csv", "labels.csv", "S.csv", "T.csv", "A.csv", "omega.csv"):
        assert (out / name).exists()
    omega = np.loadtxt(out / "omega.csv", delimiter=",")
    omega = np.atleast_2d(omega)
    np.testing.assert_array_equal(omega, omega.T)
    A = np.loadtxt(out / "A.csv", delimiter=",")
    np.testing.assert_allclose(np.atleast_2d(A).sum(axis=1), 1.0, atol=1e-6)


def test_ridges_on_image_input(tmp_path):
    out = tmp_path / "run"
    rc = cli.main(
        [
            "ridges",
            str(bundled("four_blobs.pgm")),
            "--bandwidth",
            "4.0",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    rows = (out / "ridges.csv").read_text().strip().splitlines()
    assert rows[0].startswith("x0,x1")
    assert len(rows) > 10


def test_simulate_writes_report(tmp_path):
    out = tmp_path / "run"
    rc = cli.main(
        [
            "simulate",
            "--model",
            "gauss1d",
            "--target",
            "mise_0",
            "--schedule",
            "100:0.398,400:0.302",
            "--replicates",
            "10",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["target"] == "mise_0"
    assert len(report["cells"]) == 2
    assert (out / "report.csv").exists()


# ---------------------------------------------------------------------------
# determinism and manifest replay


def strip_timestamp(manifest_path):
    d = json.loads(manifest_path.read_text())
    d.pop("timestamp")
    return json.dumps(d, sort_keys=True)


def test_identical_runs_are_byte_identical(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = cli.main(
            ["connectivity", str(src), "--bandwidth", "0.5", "--out", str(out)]
        )
        assert rc == 0
        outs.append(out)
    for artifact in ("modes.csv", "labels.csv", "S.csv", "T.csv", "A.csv", "omega.csv"):
        assert (outs[0] / artifact).read_bytes() == (outs[1] / artifact).read_bytes()
    assert strip_timestamp(outs[0] / "manifest.json") == strip_timestamp(
        outs[1] / "manifest.json"
    )


def test_run_from_manifest_replays_run(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    first = tmp_path / "first"
    assert cli.main(["modes", str(src), "--bandwidth", "0.5", "--out", str(first)]) == 0
    replay = tmp_path / "replay"
    cli.run_from_manifest(first / "manifest.json", replay)
    assert (first / "modes.csv").read_bytes() == (replay / "modes.csv").read_bytes()


# ---------------------------------------------------------------------------
# failure modes


def test_missing_input_exits_three(tmp_path, capsys):
    rc = cli.main(
        ["modes", str(tmp_path / "absent.csv"), "--bandwidth", "1", "--out", str(tmp_path / "o")]
    )
    assert rc == 3
    assert "ingestion" in capsys.readouterr().err


def test_invalid_bandwidth_exits_two(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    rc = cli.main(
        ["modes", str(src), "--bandwidth", "-1", "--out", str(tmp_path / "o")]
    )
    assert rc == 2


def test_no_convergence_exits_four(tmp_path):
    src = tmp_path / "in.csv"
    write_blobs_csv(src)
    rc = cli.main(
        [
            "modes",
            str(src),
            "--bandwidth",
            "0.5",
            "--step-tol",
            "1e-15",
            "--max-iters",
            "1",
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert rc == 4


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "gdfkit.cli", "--version"],
        capture_output=True,
        text=True,
        env={**os.environ, "GDFKIT_THREADS": "1"},
    )
    assert proc.returncode == 0
    assert proc.stdout.strip()


def test_parser_covers_all_commands():
    p = cli.build_parser()
    for cmd in ("estimate", "modes", "ridges", "cluster", "connectivity"):
        args = p.parse_args([cmd, "in.csv", "--bandwidth", "1", "--out", "o"])
        assert args.command == cmd
    args = p.parse_args(
        ["simulate", "--model", "circle", "--target", "ridge_hausdorff", "--out", "o"]
    )
    assert args.command == "simulate" and args.model == "circle"
