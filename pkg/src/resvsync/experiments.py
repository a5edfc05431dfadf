"""Experiment runners behind the command-line interface.

Each runner takes a validated config dict and an output directory,
writes CSV/JSON artifacts with deterministic bytes, and returns a
manifest listing every emitted file with its SHA-256 hash. Configs are
validated in full (unknown keys rejected) before any computation.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .dynamics import (
    DivergenceError,
    IntegratorConfig,
    circle,
    flow,
    jacobian,
    lorenz63,
)
from .embedding import (
    RandomReservoirSpec,
    check_independence,
    generate_reservoir,
    monte_carlo_embedding_rate,
    report_to_json,
    sweep_to_csv,
)
from .gs import (
    gs_fixed_point,
    gs_integral,
    gs_washout,
    pde_residual_study,
    samples_to_csv,
)
from .io import sha256_file, write_csv, write_json
from .readout import (
    ClosedLoopSystem,
    ReadoutWeights,
    closed_loop_integrate,
    closed_loop_jacobian,
    eig_compare,
    fit_readout,
    sample_features,
    clt_experiment,
    tanh_feature_family,
)
from .reservoir import (
    DrivenSignal,
    LinearReservoir,
    SinusoidReservoir,
    drive_many,
    drive_with_source,
)
from .stochastic import (
    covariance_report_to_json,
    ou_simulate,
    stationary_covariance_check,
    stationary_covariance_ensemble,
)

__all__ = [
    "ConfigError",
    "RunManifest",
    "EXPERIMENTS",
    "load_config",
    "run_experiment",
    "parallel_map",
    "lorenz_pipeline",
]

LORENZ_OBS = 6.0 * math.sqrt(2.0)


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


_REQUIRED = object()


@dataclass(frozen=True)
class _Field:
    kind: Any
    default: Any = _REQUIRED


def _coerce(name, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be an object")
        return value
    raise AssertionError(kind)


def _validate(raw: dict, fields: dict, where: str = "config") -> dict:
    unknown = set(raw) - set(fields)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    out = {}
    for name, spec in fields.items():
        if name in raw:
            out[name] = _coerce(f"{where}.{name}", raw[name], spec.kind)
        elif spec.default is _REQUIRED:
            raise ConfigError(f"missing required {where} key: {name}")
        else:
            out[name] = spec.default
    return out


_INTEGRATOR_FIELDS = {
    "rtol": _Field(float, 1.0e-9),
    "atol": _Field(float, 1.0e-12),
    "max_step": _Field(float, math.inf),
}


def _integrator(cfg: dict) -> IntegratorConfig:
    sub = _validate(cfg.get("integrator", {}), _INTEGRATOR_FIELDS, "integrator")
    try:
        return IntegratorConfig(**sub)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _point(name, value, dim) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (dim,):
        raise ConfigError(f"{name} must be a list of {dim} numbers")
    return arr


@dataclass(frozen=True)
class RunManifest:
    """Record of one experiment run: config echo, files, and hashes."""

    experiment: str
    version: str
    config: dict
    wall_clock_seconds: float
    files: dict

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / "manifest.json"
        write_json(path, {
            "experiment": self.experiment,
            "version": self.version,
            "config": self.config,
            "wall_clock_seconds": self.wall_clock_seconds,
            "files": self.files,
        })
        return path


def parallel_map(fn: Callable, items) -> list:
    """Map preserving order; threads capped by RESV_SYNC_THREADS (default 1)."""
    workers = int(os.environ.get("RESV_SYNC_THREADS", "1"))
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _finish(experiment, config, out_dir, started, paths) -> RunManifest:
    files = {p.name: sha256_file(p) for p in paths}
    manifest = RunManifest(
        experiment=experiment,
        version=__version__,
        config=config,
        wall_clock_seconds=time.perf_counter() - started,
        files=files,
    )
    manifest.write(out_dir)
    return manifest


# ---------------------------------------------------------------------------
# multi-gs: four synchronisations of the circle orbit in a sinusoid reservoir


_MULTI_GS_FIELDS = {
    "seed": _Field(int, 0),
    "lambda": _Field(float, 1.0),
    "t_final": _Field(float, 100.0),
    "washout": _Field(float, 35.0),
    "sample_dt": _Field(float, 0.05),
    "source_initial": _Field(list, [0.0, 1.0]),
    "reservoir_initials": _Field(list, [[0.5, 0.5], [-0.5, 0.5],
                                        [0.5, -0.5], [-0.5, -0.5]]),
    "probe_pair": _Field(list, [[0.45, 0.55], [0.55, 0.45]]),
    "grid_n": _Field(int, 21),
    "grid_range": _Field(list, [-1.0, 1.0]),
    "integrator": _Field(dict, {}),
}


def run_multi_gs(raw_config: dict, out_dir) -> RunManifest:
    config = _validate(raw_config, _MULTI_GS_FIELDS)
    cfg = _integrator(raw_config)
    m0 = _point("source_initial", config["source_initial"], 2)
    inits = [_point(f"reservoir_initials[{i}]", p, 2)
             for i, p in enumerate(config["reservoir_initials"])]
    probe = [_point(f"probe_pair[{i}]", p, 2)
             for i, p in enumerate(config["probe_pair"])]
    lo, hi = config["grid_range"]
    if not (isinstance(lo, (int, float)) and isinstance(hi, (int, float)) and lo < hi):
        raise ConfigError("grid_range must be [lo, hi] with lo < hi")
    washout, t_final = config["washout"], config["t_final"]
    if not 0 < washout < t_final:
        raise ConfigError("need 0 < washout < t_final")

    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = circle()
    omega = lambda m: m[0]
    model = SinusoidReservoir(config["lambda"])
    signal = DrivenSignal(source, omega, m0)

    src, trajs = drive_many(model, signal, inits, 0.0, t_final, cfg)
    paths = []

    obs_t = np.arange(0.0, t_final + 1e-12, config["sample_dt"])
    obs = np.array([omega(m) for m in src.at(obs_t).T])
    p = out_dir / "observations.csv"
    write_csv(p, ["t", "z"], np.column_stack([obs_t, obs]))
    paths.append(p)

    post_t = obs_t[obs_t >= washout]
    sampled = [tr.at(post_t).T for tr in trajs]
    for k, states in enumerate(sampled):
        p = out_dir / f"trajectory_{k}.csv"
        write_csv(p, ["t", "x0", "x1"], np.column_stack([post_t, states]))
        paths.append(p)

    grid = np.linspace(lo, hi, config["grid_n"])
    background = SinusoidReservoir(0.0)
    rows = []
    for x in grid:
        for y in grid:
            d = background.field(np.array([x, y]), 0.0)
            rows.append([x, y, d[0], d[1]])
    p = out_dir / "vector_field.csv"
    write_csv(p, ["x", "y", "dx", "dy"], rows)
    paths.append(p)

    pairwise = {}
    min_dist = math.inf
    for i in range(len(sampled)):
        for j in range(i + 1, len(sampled)):
            d = float(np.linalg.norm(sampled[i] - sampled[j], axis=1).min())
            pairwise[f"{i}-{j}"] = d
            min_dist = min(min_dist, d)

    _, (pa, pb) = drive_many(model, signal, probe, 0.0, washout + 1.0, cfg)
    probe_dist = float(np.linalg.norm(pa.at(washout) - pb.at(washout)))

    p = out_dir / "summary.json"
    write_json(p, {
        "lambda": config["lambda"],
        "washout": washout,
        "t_final": t_final,
        "min_pairwise_distance": min_dist,
        "pairwise_distances": pairwise,
        "probe_distance_at_washout": probe_dist,
        "final_states": [tr.final_state.tolist() for tr in trajs],
    })
    paths.append(p)
    return _finish("multi_gs", config, out_dir, started, paths)


# ---------------------------------------------------------------------------
# gs-check: quadrature vs analytic vs washout on the circle, plus the
# flow-derivative residual convergence table


_GS_CHECK_FIELDS = {
    "seed": _Field(int, 0),
    "a": _Field(float, 1.0),
    "horizon": _Field(float, 20.0),
    "step": _Field(float, 0.01),
    "orbit_points": _Field(int, 20),
    "washout": _Field(float, 35.0),
    "washout_horizon": _Field(float, 100.0),
    "pde_deltas": _Field(list, [1.0e-2, 1.0e-3, 1.0e-4]),
    "pde_horizon": _Field(float, 45.0),
    "pde_step": _Field(float, 5.0e-3),
    "integrator": _Field(dict, {}),
}


def run_gs_check(raw_config: dict, out_dir) -> RunManifest:
    config = _validate(raw_config, _GS_CHECK_FIELDS)
    cfg = _integrator(raw_config)
    a = config["a"]
    if a <= 0:
        raise ConfigError("a must be positive")
    deltas = [float(d) for d in config["pde_deltas"]]
    if len(deltas) < 2 or any(d <= 0 for d in deltas):
        raise ConfigError("pde_deltas must be >= 2 positive numbers")

    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = circle()
    omega = lambda m: m[0]
    res = LinearReservoir(np.array([[a]]), np.array([[1.0]]))

    def analytic(m):
        return (a * m[0] + m[1]) / (a * a + 1.0)

    washout_samples, _ = gs_washout(
        res, source, omega, np.array([0.0, 1.0]),
        washout=config["washout"], horizon=config["washout_horizon"],
        cfg=cfg, sample_dt=(config["washout_horizon"] - config["washout"]) / config["orbit_points"],
    )
    washout_samples = washout_samples[: config["orbit_points"]]

    rows = []
    max_int_err = 0.0
    max_wash_err = 0.0
    for k, ws in enumerate(washout_samples):
        m = ws.m
        ref = analytic(m)
        gi = gs_integral(res, source, omega, m, config["horizon"],
                         config["step"], cfg)
        int_err = abs(float(gi.value[0]) - ref)
        wash_err = abs(float(ws.value[0]) - ref)
        max_int_err = max(max_int_err, int_err)
        max_wash_err = max(max_wash_err, wash_err)
        rows.append([k, m[0], m[1], ref, gi.value[0], gi.error_bound,
                     ws.value[0], ws.error_bound, int_err, wash_err])
    p_cmp = out_dir / "gs_compare.csv"
    write_csv(p_cmp, ["k", "u0", "v0", "analytic", "integral", "integral_bound",
                      "washout", "washout_bound", "integral_err", "washout_err"],
              rows, int_cols=(0,))

    m_pde = np.array([-math.sin(0.7), math.cos(0.7)])
    ds, residuals, slope = pde_residual_study(
        res, source, omega, m_pde, deltas,
        horizon=config["pde_horizon"], step=config["pde_step"], cfg=cfg)
    p_pde = out_dir / "pde_residuals.csv"
    write_csv(p_pde, ["delta", "residual"], np.column_stack([ds, residuals]))

    p_sum = out_dir / "summary.json"
    write_json(p_sum, {
        "a": a,
        "max_integral_error": max_int_err,
        "max_washout_error": max_wash_err,
        "pde_slope": slope,
    })
    return _finish("gs_check", config, out_dir, started,
                   [p_cmp, p_pde, p_sum])


# ---------------------------------------------------------------------------
# embed-check: Monte-Carlo sweep of the fixed-point embedding conditions


_EMBED_FIELDS = {
    "seed": _Field(int, 0),
    "n_reservoir": _Field(int, 7),
    "scale": _Field(float, 30.0),
    "trials": _Field(int, 1000),
}


def run_embed_check(raw_config: dict, out_dir) -> RunManifest:
    config = _validate(raw_config, _EMBED_FIELDS)
    if config["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = lorenz63()
    J = jacobian(source, source.fixed_point("m*"))
    spec = RandomReservoirSpec(config["n_reservoir"], config["scale"],
                               seed=config["seed"])
    mc = monte_carlo_embedding_rate(spec, J, config["trials"],
                                    map_fn=parallel_map)
    p_sweep = out_dir / "sweep.csv"
    sweep_to_csv(p_sweep, mc)

    base = generate_reservoir(spec)
    report = check_independence(base, np.linalg.eigvals(J), seed=config["seed"])
    p_rep = out_dir / "report.json"
    p_rep.write_text(report_to_json(report) + "\n")

    p_sum = out_dir / "summary.json"
    write_json(p_sum, {
        "trials": config["trials"],
        "fraction_true": mc.fraction,
        "min_singular_value": mc.min_singular_value,
    })
    return _finish("embed_check", config, out_dir, started,
                   [p_sweep, p_rep, p_sum])


# ---------------------------------------------------------------------------
# lorenz-reconstruct: embed the Lorenz fixed point, train a readout, and
# compare closed-loop and source spectra


_LORENZ_FIELDS = {
    "seed": _Field(int, 0),
    "n_reservoir": _Field(int, 7),
    "n_features": _Field(int, 300),
    "scale": _Field(float, 30.0),
    "t_final": _Field(float, 200.0),
    "sample_dt": _Field(float, 0.02),
    "train_start": _Field(float, 0.0),
    "damp": _Field(float, 0.0),
    "source_offset": _Field(float, 1.0e-3),
    "feature_seed_offset": _Field(int, 10_000),
    "pca_components": _Field(int, 3),
    "integrator": _Field(dict, {}),
}


def lorenz_pipeline(config: dict, cfg: IntegratorConfig) -> dict:
    """Run the reconstruction pipeline and return its in-memory pieces.

    The source starts at the fixed point shifted by `source_offset` in
    every coordinate; the reservoir starts exactly on the
    synchronisation image of the fixed point. The readout is trained on
    uniformly spaced samples of the co-integrated trajectory.
    """
    source = lorenz63()
    mstar = source.fixed_point("m*")
    spec = RandomReservoirSpec(config["n_reservoir"], config["scale"],
                               seed=config["seed"])
    res = generate_reservoir(spec)
    xstar = gs_fixed_point(res, LORENZ_OBS)
    omega = lambda m: m[0]
    signal = DrivenSignal(source, omega, mstar + config["source_offset"])
    src, traj = drive_with_source(res, signal, xstar, 0.0,
                                  config["t_final"], cfg)

    ts = np.arange(0.0, config["t_final"] + 1e-12, config["sample_dt"])
    states_all = traj.at(ts).T
    obs_all = src.at(ts)[0]
    train = ts >= config["train_start"]

    bank = sample_features(config["n_features"], config["n_reservoir"],
                           config["seed"] + config["feature_seed_offset"])
    weights = fit_readout(bank, states_all[train], obs_all[train],
                          config["damp"])
    closed = ClosedLoopSystem(res, bank, weights)
    J_source = jacobian(source, mstar)
    match = eig_compare(closed_loop_jacobian(closed, xstar), J_source)

    null = ClosedLoopSystem(res, bank, ReadoutWeights(
        w=np.zeros(config["n_features"]), damp=0.0, residual=0.0))
    null_match = eig_compare(closed_loop_jacobian(null, xstar), J_source)

    return {
        "reservoir": res,
        "xstar": xstar,
        "times": ts,
        "source_states": src.at(ts).T,
        "reservoir_states": states_all,
        "observations": obs_all,
        "bank": bank,
        "weights": weights,
        "closed": closed,
        "match": match,
        "null_match": null_match,
    }


def _boundedness_probe(closed, x0, horizon: float, radius: float,
                       max_steps: int = 20_000):
    """Does the autonomous loop stay inside the given ball? Advisory only.

    Integrates at coarse tolerance, stopping at the first radius
    crossing or when the step budget runs out (reported as bounded:
    no escape observed).
    """
    from scipy.integrate import RK45

    solver = RK45(lambda t, y: closed.field(y), 0.0, x0, t_bound=horizon,
                  rtol=1e-6, atol=1e-9)
    worst = float(np.linalg.norm(x0))
    for _ in range(max_steps):
        if solver.status != "running":
            break
        try:
            solver.step()
        except Exception:
            return False, worst
        worst = max(worst, float(np.linalg.norm(solver.y)))
        if worst > radius:
            return False, worst
    return True, worst


def _pca(states: np.ndarray, k: int):
    centred = states - states.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    comps = vt[:k]
    for i in range(k):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return centred @ comps.T, comps


def run_lorenz_reconstruct(raw_config: dict, out_dir) -> RunManifest:
    config = _validate(raw_config, _LORENZ_FIELDS)
    cfg = _integrator(raw_config)
    if not 0 <= config["train_start"] < config["t_final"]:
        raise ConfigError("train_start must lie in [0, t_final)")
    if config["pca_components"] < 1:
        raise ConfigError("pca_components must be >= 1")

    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pipe = lorenz_pipeline(config, cfg)
    ts = pipe["times"]
    paths = []

    p = out_dir / "observations.csv"
    write_csv(p, ["t", "z"], np.column_stack([ts, pipe["observations"]]))
    paths.append(p)

    p = out_dir / "source.csv"
    write_csv(p, ["t", "x0", "x1", "x2"],
              np.column_stack([ts, pipe["source_states"]]))
    paths.append(p)

    scores, _ = _pca(pipe["reservoir_states"], config["pca_components"])
    p = out_dir / "reservoir_pca.csv"
    write_csv(p, ["t"] + [f"pc{i + 1}" for i in range(config["pca_components"])],
              np.column_stack([ts, scores]))
    paths.append(p)

    match = pipe["match"]
    rows = [
        [s.real, s.imag, m.real, m.imag, d]
        for s, m, d in zip(match.source_eigs, match.matched, match.distances)
    ]
    p = out_dir / "eig_compare.csv"
    write_csv(p, ["source_re", "source_im", "matched_re", "matched_im", "dist"], rows)
    paths.append(p)

    p = out_dir / "eig_closed.csv"
    write_csv(p, ["re", "im"],
              [[z.real, z.imag] for z in match.closed_eigs])
    paths.append(p)

    # closed-loop boundedness is checked empirically and only logged
    train_norm = float(np.linalg.norm(pipe["reservoir_states"], axis=1).max())
    bounded, escape_norm = _boundedness_probe(
        pipe["closed"], pipe["xstar"] + 1.0e-3, 50.0, 10.0 * train_norm)
    if not bounded:
        import logging

        logging.getLogger(__name__).warning(
            "closed-loop trajectory left 10x the training ball")

    p = out_dir / "summary.json"
    write_json(p, {
        "seed": config["seed"],
        "training_loss": pipe["weights"].residual,
        "matched_distances": match.distances.tolist(),
        "max_matched_distance": match.max_distance,
        "null_max_matched_distance": pipe["null_match"].max_distance,
        "closed_loop_bounded": bounded,
        "closed_loop_max_norm": escape_norm,
        "train_max_norm": train_norm,
    })
    paths.append(p)
    return _finish("lorenz_reconstruct", config, out_dir, started, paths)


# ---------------------------------------------------------------------------
# clt: variance scaling of the random-feature estimator


_CLT_FIELDS = {
    "seed": _Field(int, 0),
    "x": _Field(list, [1.0]),
    "d_list": _Field(list, [10, 30, 100, 300, 1000]),
    "trials": _Field(int, 2000),
    "reference_samples": _Field(int, 1_000_000),
}


def run_clt(raw_config: dict, out_dir) -> RunManifest:
    config = _validate(raw_config, _CLT_FIELDS)
    x = np.asarray(config["x"], dtype=float)
    if x.ndim != 1 or len(x) < 1:
        raise ConfigError("x must be a nonempty list of numbers")
    d_list = config["d_list"]
    if len(d_list) < 2 or any((not isinstance(d, int)) or d < 1 for d in d_list):
        raise ConfigError("d_list must hold >= 2 positive integers")

    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h, sampler = tanh_feature_family(len(x))
    report = clt_experiment(
        h, lambda thetas: np.ones(len(thetas)), sampler, x,
        d_list, config["trials"], np.random.default_rng(config["seed"]),
        reference_samples=config["reference_samples"],
    )
    rows = np.column_stack([
        report.d_list, np.full(len(d_list), config["trials"]),
        report.variances, report.sigma2_ref / report.d_list,
    ])
    p_csv = out_dir / "clt.csv"
    write_csv(p_csv, ["D", "trials", "emp_var", "ref_var"], rows,
              int_cols=(0, 1))
    p_sum = out_dir / "summary.json"
    write_json(p_sum, {
        "slope": report.slope,
        "u_ref": report.u_ref,
        "sigma2_ref": report.sigma2_ref,
        "mean_errors": report.mean_errors.tolist(),
    })
    return _finish("clt", config, out_dir, started, [p_csv, p_sum])


# ---------------------------------------------------------------------------
# noise: stationary covariance of the observation-noise error process


_NOISE_FIELDS = {
    "seed": _Field(int, 0),
    "reservoir": _Field(dict, {"type": "scalar", "a": 1.0}),
    "sigma0": _Field(float, 0.5),
    "dt": _Field(float, 0.01),
    "t_final": _Field(float, 2000.0),
    "burn_in": _Field(float, -1.0),
    "mode": _Field(str, "ensemble"),
    "n_paths": _Field(int, 1000),
}


def _noise_reservoir(spec: dict, seed: int) -> LinearReservoir:
    kind = spec.get("type")
    if kind == "scalar":
        extra = set(spec) - {"type", "a"}
        if extra:
            raise ConfigError(f"unknown reservoir keys: {sorted(extra)}")
        a = spec.get("a", 1.0)
        if not isinstance(a, (int, float)) or a <= 0:
            raise ConfigError("reservoir.a must be positive")
        return LinearReservoir(np.array([[float(a)]]), np.array([[1.0]]))
    if kind == "random":
        extra = set(spec) - {"type", "n", "scale", "seed"}
        if extra:
            raise ConfigError(f"unknown reservoir keys: {sorted(extra)}")
        n = spec.get("n", 7)
        scale = spec.get("scale", 30.0)
        rseed = spec.get("seed", seed)
        if not isinstance(n, int) or n < 1:
            raise ConfigError("reservoir.n must be a positive integer")
        return generate_reservoir(RandomReservoirSpec(n, float(scale), seed=rseed))
    raise ConfigError("reservoir.type must be 'scalar' or 'random'")


def run_noise(raw_config: dict, out_dir) -> RunManifest:
    config = _validate(raw_config, _NOISE_FIELDS)
    res = _noise_reservoir(config["reservoir"], config["seed"])
    if config["mode"] not in ("ensemble", "long_path"):
        raise ConfigError("mode must be 'ensemble' or 'long_path'")
    if config["sigma0"] < 0:
        raise ConfigError("sigma0 must be >= 0")
    burn_in = config["burn_in"]
    if burn_in <= 0:
        burn_in = 12.0 / res.sigma_min
    if burn_in >= config["t_final"]:
        raise ConfigError("burn_in must be below t_final")

    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config["mode"] == "ensemble":
        report = stationary_covariance_ensemble(
            res, config["sigma0"], config["dt"], config["t_final"],
            burn_in, config["n_paths"], config["seed"])
    else:
        path = ou_simulate(res.A, config["sigma0"] * res.C[:, 0],
                           np.zeros(res.state_dim), config["dt"],
                           config["t_final"], config["seed"])
        report = stationary_covariance_check([path], res.A, res.C,
                                             config["sigma0"], burn_in)

    p_cov = out_dir / "covariance.json"
    p_cov.write_text(covariance_report_to_json(report) + "\n")
    summary = {
        "mode": config["mode"],
        "sigma0": config["sigma0"],
        "burn_in": burn_in,
        "dist_lyapunov": report.dist_lyapunov,
        "dist_paper_candidate": report.dist_paper_candidate,
        "effective_samples": report.effective_samples,
        "insufficient_samples": report.insufficient_samples,
    }
    if res.state_dim == 1:
        a = float(res.A[0, 0])
        summary["scalar_expected_variance"] = config["sigma0"] ** 2 / (2.0 * a)
        summary["scalar_empirical_variance"] = float(report.empirical[0, 0])
    p_sum = out_dir / "summary.json"
    write_json(p_sum, summary)
    return _finish("noise", config, out_dir, started, [p_cov, p_sum])


EXPERIMENTS = {
    "multi-gs": run_multi_gs,
    "gs-check": run_gs_check,
    "embed-check": run_embed_check,
    "lorenz-reconstruct": run_lorenz_reconstruct,
    "clt": run_clt,
    "noise": run_noise,
}


def load_config(path) -> dict:
    import json

    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def run_experiment(name: str, config: dict, out_dir) -> RunManifest:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    return EXPERIMENTS[name](config, out_dir)
