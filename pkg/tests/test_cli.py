import json
import subprocess
import sys

import numpy as np
import pytest

from resvsync.cli import main
from resvsync.dynamics import DivergenceError
from resvsync.experiments import ConfigError, EXPERIMENTS, run_experiment
from resvsync.io import read_csv, sha256_file, write_csv


def write_config(tmp_path, name, payload):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(payload))
    return path


SMOKE_CONFIGS = {
    "multi-gs": {"t_final": 40.0, "sample_dt": 0.1, "grid_n": 5},
    "gs-check": {"horizon": 6.0, "step": 0.02, "orbit_points": 4,
                 "washout": 10.0, "washout_horizon": 20.0,
                 "pde_deltas": [1e-2, 1e-3], "pde_horizon": 20.0,
                 "pde_step": 0.01},
    "embed-check": {"trials": 25},
    "lorenz-reconstruct": {"t_final": 3.0, "n_features": 20,
                           "sample_dt": 0.05},
    "clt": {"d_list": [10, 50], "trials": 100, "reference_samples": 20_000},
    "noise": {"t_final": 60.0, "burn_in": 12.0, "n_paths": 50},
}


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_smoke_run_writes_manifest(tmp_path, name):
    cfg_path = write_config(tmp_path, name, SMOKE_CONFIGS[name])
    out = tmp_path / "out"
    assert main([name, "--config", str(cfg_path), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == name.replace("-", "_")
    assert manifest["files"]
    for fname, digest in manifest["files"].items():
        assert (out / fname).exists()
        assert sha256_file(out / fname) == digest


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_unknown_config_key_rejected(tmp_path, name):
    cfg_path = write_config(tmp_path, name, {"bogus_key": 1})
    out = tmp_path / "out"
    assert main([name, "--config", str(cfg_path), "--out", str(out)]) == 2
    assert not (out / "manifest.json").exists()


def test_bad_json_rejected(tmp_path):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text("{not json")
    assert main(["clt", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 2


def test_bad_types_rejected(tmp_path):
    cfg_path = write_config(tmp_path, "multi-gs", {"lambda": "one"})
    assert main(["multi-gs", "--config", str(cfg_path),
                 "--out", str(tmp_path / "o")]) == 2


def test_divergence_maps_to_exit_3(tmp_path, monkeypatch):
    def boom(config, out_dir):
        raise DivergenceError("synthetic blow-up", 1.0, np.zeros(2))

    monkeypatch.setitem(EXPERIMENTS, "clt", boom)
    cfg_path = write_config(tmp_path, "clt", {})
    assert main(["clt", "--config", str(cfg_path),
                 "--out", str(tmp_path / "o")]) == 3


def test_seed_override(tmp_path):
    cfg_path = write_config(tmp_path, "embed-check", {"trials": 5})
    out = tmp_path / "out"
    assert main(["embed-check", "--config", str(cfg_path),
                 "--out", str(out), "--seed", "5"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 5


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_reruns_are_hash_identical(tmp_path, name):
    config = dict(SMOKE_CONFIGS[name])
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    ma = run_experiment(name, dict(config), out_a)
    mb = run_experiment(name, dict(config), out_b)
    assert ma.files == mb.files


def test_multi_gs_summary_distances(tmp_path):
    manifest = run_experiment("multi-gs", {"t_final": 45.0, "sample_dt": 0.1,
                                           "grid_n": 5}, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["min_pairwise_distance"] > 0.1
    assert summary["probe_distance_at_washout"] < 1e-3
    header, _ = read_csv(tmp_path / "vector_field.csv")
    assert header == ["x", "y", "dx", "dy"]
    assert "observations.csv" in manifest.files


def test_multi_gs_lambda_zero_equilibria(tmp_path):
    run_experiment("multi-gs", {"lambda": 0.0, "t_final": 40.0,
                                "sample_dt": 0.1, "grid_n": 3}, tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    # decoupled sinusoid flow rests at half-integer equilibria
    for state in summary["final_states"]:
        doubled = 2.0 * np.asarray(state)
        assert np.abs(doubled - np.round(doubled)).max() < 1e-6


INT_COLS = {
    "gs_compare.csv": (0,),
    "sweep.csv": (0, 1, 3),
    "clt.csv": (0, 1),
}


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_emitted_csvs_roundtrip(tmp_path, name):
    manifest = run_experiment(name, dict(SMOKE_CONFIGS[name]), tmp_path)
    csvs = [f for f in manifest.files if f.endswith(".csv")]
    if name != "noise":
        assert csvs
    for fname in csvs:
        src = tmp_path / fname
        header, data = read_csv(src)
        clone = tmp_path / f"clone_{fname}"
        write_csv(clone, header, data, int_cols=INT_COLS.get(fname, ()))
        assert clone.read_bytes() == src.read_bytes(), fname


def test_console_script_installed(tmp_path):
    cfg_path = write_config(tmp_path, "embed-check", {"trials": 4})
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "resvsync.cli", "embed-check",
         "--config", str(cfg_path), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "manifest.json").exists()
