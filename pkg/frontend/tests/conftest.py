import json
import subprocess
import sys

import pytest


def run_cli(args):
    proc = subprocess.run([sys.executable, "-m", "resvsync.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    """One multi-gs run and one Lorenz run produced through the CLI."""
    root = tmp_path_factory.mktemp("runs")
    multi_cfg = root / "multi.json"
    multi_cfg.write_text(json.dumps({"t_final": 45.0, "sample_dt": 0.1,
                                     "grid_n": 9}))
    run_cli(["multi-gs", "--config", str(multi_cfg),
             "--out", str(root / "multi")])
    lorenz_cfg = root / "lorenz.json"
    lorenz_cfg.write_text(json.dumps({"t_final": 5.0, "n_features": 20,
                                      "sample_dt": 0.05}))
    run_cli(["lorenz-reconstruct", "--config", str(lorenz_cfg),
             "--out", str(root / "lorenz")])
    return root


@pytest.fixture(scope="session")
def manifests(run_dir):
    return [str(run_dir / "multi" / "manifest.json"),
            str(run_dir / "lorenz" / "manifest.json")]
