"""Figure builders over the resv-sync CSV/JSON artifacts.

Each figure is a pure function of its input files plus fixed style
options, so rendered images are byte-stable across reruns. Inputs are
located through run manifests: the multi-synchronisation run feeds
figures 1-2, the Lorenz reconstruction run feeds figures 3-6.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FigureSpec", "RenderError", "REQUIRED_INPUTS",
           "specs_from_manifests", "build_figure", "render"]

FIGURE_IDS = (1, 2, 3, 4, 5, 6)

REQUIRED_INPUTS = {
    1: ("multi_gs:observations.csv", "multi_gs:summary.json"),
    2: ("multi_gs:vector_field.csv", "multi_gs:trajectory_0.csv",
        "multi_gs:trajectory_1.csv", "multi_gs:trajectory_2.csv",
        "multi_gs:trajectory_3.csv"),
    3: ("lorenz_reconstruct:observations.csv",),
    4: ("lorenz_reconstruct:source.csv",),
    5: ("lorenz_reconstruct:reservoir_pca.csv",),
    6: ("lorenz_reconstruct:eig_compare.csv",
        "lorenz_reconstruct:eig_closed.csv"),
}

DEFAULT_STYLE = {"colormap": "viridis", "dpi": 130}


class RenderError(RuntimeError):
    """Missing, empty, or malformed figure input."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: id, resolved input files, output path, style."""

    figure_id: int
    inputs: dict
    output: Path
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise RenderError(f"unknown figure id {self.figure_id}")
        missing = [role for role in REQUIRED_INPUTS[self.figure_id]
                   if role not in self.inputs]
        if missing:
            raise RenderError(
                f"figure {self.figure_id} is missing inputs: {missing}")
        for role, path in self.inputs.items():
            if not Path(path).is_file():
                raise RenderError(f"input {role} does not exist: {path}")

    def opt(self, key):
        return self.style.get(key, DEFAULT_STYLE[key])


def _read_csv(path):
    lines = Path(path).read_text().strip().split("\n")
    if len(lines) < 2:
        raise RenderError(f"{path} holds no data rows")
    header = lines[0].split(",")
    try:
        data = np.array([[float(v) for v in line.split(",")]
                         for line in lines[1:]])
    except ValueError as err:
        raise RenderError(f"{path} is not numeric CSV: {err}") from err
    if data.shape[1] != len(header):
        raise RenderError(f"{path} rows disagree with header")
    return header, data


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise RenderError(f"missing input file: {path}") from err
    except json.JSONDecodeError as err:
        raise RenderError(f"{path} is not valid JSON: {err}") from err


def specs_from_manifests(manifest_paths, figure_ids, out_dir, style=None):
    """Resolve figure inputs from one or more run manifests.

    Every manifest contributes its files under the role prefix
    `<experiment>:<filename>`; later manifests win on collisions.
    """
    roles = {}
    for mpath in manifest_paths:
        mpath = Path(mpath)
        manifest = _read_json(mpath)
        if "experiment" not in manifest or "files" not in manifest:
            raise RenderError(f"{mpath} is not a run manifest")
        base = mpath.parent
        for fname in manifest["files"]:
            roles[f"{manifest['experiment']}:{fname}"] = base / fname
    out_dir = Path(out_dir)
    specs = []
    for fid in figure_ids:
        needed = REQUIRED_INPUTS[fid]
        missing = [r for r in needed if r not in roles]
        if missing:
            raise RenderError(
                f"figure {fid} needs {missing}; supply the manifest of "
                "the run that produces them")
        specs.append(FigureSpec(
            figure_id=fid,
            inputs={r: roles[r] for r in needed},
            output=out_dir / f"figure_{fid}.png",
            style=dict(style or {}),
        ))
    return specs


def _fig1(spec):
    _, obs = _read_csv(spec.inputs["multi_gs:observations.csv"])
    summary = _read_json(spec.inputs["multi_gs:summary.json"])
    washout = float(summary["washout"])
    t, z = obs[:, 0], obs[:, 1]
    fig, ax = plt.subplots(figsize=(8, 3.2))
    early = t <= washout
    ax.plot(t[early], z[early], color="tab:blue", lw=1.0)
    ax.plot(t[~early], z[~early], color="tab:orange", lw=1.0)
    ax.axvspan(t[0], washout, color="tab:blue", alpha=0.08)
    ax.set_xlabel("t")
    ax.set_ylabel("observation")
    return fig


def _fig2(spec):
    _, field_rows = _read_csv(spec.inputs["multi_gs:vector_field.csv"])
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.quiver(field_rows[:, 0], field_rows[:, 1],
              field_rows[:, 2], field_rows[:, 3],
              color="0.7", angles="xy", width=0.003)
    cmap = spec.opt("colormap")
    for k in range(4):
        _, traj = _read_csv(spec.inputs[f"multi_gs:trajectory_{k}.csv"])
        ax.scatter(traj[:, 1], traj[:, 2], c=traj[:, 0], cmap=cmap, s=2.0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    return fig


def _fig3(spec):
    _, obs = _read_csv(spec.inputs["lorenz_reconstruct:observations.csv"])
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.scatter(obs[:, 0], obs[:, 1], c=obs[:, 0], cmap=spec.opt("colormap"),
               s=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("observation")
    return fig


def _fig4(spec):
    _, src = _read_csv(spec.inputs["lorenz_reconstruct:source.csv"])
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    ax.scatter(src[:, 1], src[:, 2], src[:, 3], c=src[:, 0],
               cmap=spec.opt("colormap"), s=1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    return fig


def _fig5(spec):
    _, pca = _read_csv(spec.inputs["lorenz_reconstruct:reservoir_pca.csv"])
    if pca.shape[1] < 4:
        raise RenderError("reservoir PCA file needs three components")
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    ax.scatter(pca[:, 1], pca[:, 2], pca[:, 3], c=pca[:, 0],
               cmap=spec.opt("colormap"), s=1.0)
    # metric quantities are not preserved by the embedding: no labels,
    # no tick marks
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_zticks([])
    return fig


def _fig6(spec):
    _, cmp_rows = _read_csv(spec.inputs["lorenz_reconstruct:eig_compare.csv"])
    _, closed = _read_csv(spec.inputs["lorenz_reconstruct:eig_closed.csv"])
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter(closed[:, 0], closed[:, 1], marker="o", s=70,
               facecolor="tab:red", edgecolor="none", label="closed loop")
    ax.scatter(cmp_rows[:, 0], cmp_rows[:, 1], marker="x", s=80,
               color="tab:blue", label="source")
    ax.axhline(0.0, color="0.85", lw=0.8, zorder=0)
    ax.axvline(0.0, color="0.85", lw=0.8, zorder=0)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend()
    return fig


_BUILDERS = {1: _fig1, 2: _fig2, 3: _fig3, 4: _fig4, 5: _fig5, 6: _fig6}


def build_figure(spec: FigureSpec):
    """Build (and return) the matplotlib figure for a spec."""
    return _BUILDERS[spec.figure_id](spec)


def render(spec: FigureSpec) -> Path:
    """Render the figure to its output path; bytes depend only on inputs."""
    fig = build_figure(spec)
    try:
        spec.output.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(spec.output, dpi=spec.opt("dpi"),
                    metadata={"Software": "render_figures"})
    finally:
        plt.close(fig)
    return spec.output
