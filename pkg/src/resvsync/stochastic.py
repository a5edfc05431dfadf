"""Noisy-observation reservoir SDE and stationary error statistics.

With observations perturbed by white noise the linear reservoir state
is a stochastic process whose deviation from the deterministic
synchronisation is an Ornstein-Uhlenbeck process dY = -A Y dt + s C dW.
Paths are simulated by Euler-Maruyama; the stationary covariance is
checked against the Lyapunov-equation solution A S + S A^T = s^2 C C^T
and, for reference, against the candidate s^2 A^{-1}; both distances
are always reported and neither is asserted here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .dynamics import DEFAULT_CONFIG, IntegratorConfig, SourceSystem, integrate
from .reservoir import LinearReservoir

__all__ = [
    "SDEPath",
    "CovarianceReport",
    "euler_maruyama",
    "ou_simulate",
    "error_process",
    "stationary_covariance_check",
    "stationary_covariance_ensemble",
    "lyapunov_covariance",
    "covariance_report_to_json",
]

_STABILITY_LIMIT = 0.5  # explicit Euler needs dt * sigma_max(A) below this


@dataclass(frozen=True, eq=False)
class SDEPath:
    """States on a uniform grid produced by one noise realisation."""

    times: np.ndarray
    states: np.ndarray
    dt: float
    seed: Optional[int] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if len(times) != len(states) or len(times) < 1:
            raise ValueError("times and states must align")
        if len(times) > 1:
            spacing = np.diff(times)
            if np.abs(spacing - self.dt).max() > 1e-9 * max(1.0, self.dt):
                raise ValueError("times must be uniformly spaced by dt")
        if not np.isfinite(states).all():
            raise ValueError("states must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def to_csv(self, path) -> None:
        from .io import write_csv

        n = self.states.shape[1]
        write_csv(path, ["t"] + [f"x{i}" for i in range(n)],
                  np.column_stack([self.times, self.states]))


@dataclass(frozen=True, eq=False)
class CovarianceReport:
    """Empirical stationary covariance against both closed-form candidates."""

    empirical: np.ndarray
    lyapunov: np.ndarray
    paper_candidate: np.ndarray
    dist_lyapunov: float
    dist_paper_candidate: float
    sigma0: float
    effective_samples: float
    insufficient_samples: bool


def _check_guard(dt: float, sigma_max: float) -> None:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt * sigma_max >= _STABILITY_LIMIT:
        raise ValueError(
            f"dt * sigma_max(A) = {dt * sigma_max:.3g} exceeds the "
            f"stability guard {_STABILITY_LIMIT}; reduce dt")


def _rng_and_seed(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng, None
    seed = int(seed_or_rng)
    return np.random.default_rng(seed), seed


def euler_maruyama(res: LinearReservoir, source: SourceSystem, omega, sigma,
                   m0, x0, dt: float, t_final: float, seed) -> SDEPath:
    """Euler-Maruyama path of dX = (-A X + C omega) dt + C sigma dW.

    The source orbit is integrated deterministically once and sampled
    on the uniform grid; noise enters only through the observation
    channel. `sigma` is a constant or a function of the source state.
    Identical seeds give bit-identical paths.
    """
    _check_guard(dt, res.sigma_max)
    rng, seed_val = _rng_and_seed(seed)
    m0 = np.asarray(m0, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n_steps = int(round(t_final / dt))
    times = dt * np.arange(n_steps + 1)
    orbit = integrate(source, m0, 0.0, t_final + dt, DEFAULT_CONFIG)
    ms = orbit.at(times).T  # (n+1, q)
    om = np.array([np.atleast_1d(omega(m)) for m in ms], dtype=float)
    if callable(sigma):
        sig = np.array([float(sigma(m)) for m in ms])
    else:
        sig = np.full(n_steps + 1, float(sigma))
    A, C = res.A, res.C
    d = res.input_dim
    sqdt = np.sqrt(dt)
    X = np.empty((n_steps + 1, res.state_dim))
    X[0] = x0
    noise = rng.standard_normal((n_steps, d))
    for k in range(n_steps):
        drift = -A @ X[k] + C @ om[k]
        X[k + 1] = X[k] + drift * dt + C @ (sig[k] * sqdt * noise[k])
    return SDEPath(times=times, states=X, dt=dt, seed=seed_val)


def ou_simulate(A: np.ndarray, B, x0, dt: float, t_final: float, seed) -> SDEPath:
    """Euler-Maruyama path of the Ornstein-Uhlenbeck SDE dY = -A Y dt + B dW.

    B is an N-vector driven by a scalar Wiener increment per step.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(-1)
    _check_guard(dt, float(np.linalg.eigvalsh(A)[-1]))
    rng, seed_val = _rng_and_seed(seed)
    x0 = np.asarray(x0, dtype=float)
    n_steps = int(round(t_final / dt))
    times = dt * np.arange(n_steps + 1)
    sqdt = np.sqrt(dt)
    X = np.empty((n_steps + 1, len(B)))
    X[0] = x0
    noise = rng.standard_normal(n_steps)
    for k in range(n_steps):
        X[k + 1] = X[k] - (A @ X[k]) * dt + B * (sqdt * noise[k])
    return SDEPath(times=times, states=X, dt=dt, seed=seed_val)


def error_process(path: SDEPath, gs_reference) -> SDEPath:
    """Pointwise difference between a noisy path and a reference map t -> f."""
    if callable(gs_reference):
        ref = np.array([np.asarray(gs_reference(t), dtype=float) for t in path.times])
    else:
        ref = np.asarray(gs_reference, dtype=float)
        if ref.shape != path.states.shape:
            raise ValueError("reference grid does not match the path")
    return SDEPath(times=path.times, states=path.states - ref,
                   dt=path.dt, seed=path.seed)


def lyapunov_covariance(A: np.ndarray, C: np.ndarray, sigma0: float) -> np.ndarray:
    """Solve A S + S A^T = sigma0^2 C C^T for the OU stationary covariance."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        C = C.reshape(-1, 1)
    return solve_continuous_lyapunov(A, sigma0 ** 2 * (C @ C.T))


def _ess(n_samples: int, n_paths: int, dt: float, sigma_min: float) -> float:
    # decorrelation time of the slowest mode is 1/sigma_min; one
    # effective sample per two time constants
    return n_samples * n_paths * dt * sigma_min / 2.0


def _build_report(emp: np.ndarray, A, C, sigma0: float, ess: float) -> CovarianceReport:
    lyap = lyapunov_covariance(A, C, sigma0)
    paper = sigma0 ** 2 * np.linalg.inv(np.asarray(A, dtype=float))

    def rel_dist(target):
        denom = np.linalg.norm(target)
        if denom == 0.0:
            return float(np.linalg.norm(emp))
        return float(np.linalg.norm(emp - target) / denom)

    return CovarianceReport(
        empirical=emp,
        lyapunov=lyap,
        paper_candidate=paper,
        dist_lyapunov=rel_dist(lyap),
        dist_paper_candidate=rel_dist(paper),
        sigma0=float(sigma0),
        effective_samples=float(ess),
        insufficient_samples=bool(ess < 1.0e4),
    )


def stationary_covariance_check(paths: Union[SDEPath, Sequence[SDEPath]],
                                A, C, sigma0: float,
                                burn_in: float) -> CovarianceReport:
    """Empirical covariance of post-burn-in samples vs both candidates.

    Accepts one long path or an ensemble. Requires
    burn_in >= 10 / sigma_min(A) so the transient has died before
    statistics start; an effective-sample count below 1e4 only flags
    the report.
    """
    if isinstance(paths, SDEPath):
        paths = [paths]
    A = np.asarray(A, dtype=float)
    sigma_min = float(np.linalg.eigvalsh(A)[0])
    if burn_in < 10.0 / sigma_min:
        raise ValueError(f"burn_in must be >= 10/sigma_min = {10.0 / sigma_min:.3g}")
    blocks = []
    n_post = 0
    for p in paths:
        keep = p.times > burn_in
        blocks.append(p.states[keep])
        n_post = max(n_post, int(keep.sum()))
    data = np.vstack(blocks)
    if len(data) < 2:
        raise ValueError("no samples remain after burn-in")
    emp = np.cov(data.T) if data.shape[1] > 1 else np.array([[data.var(ddof=1)]])
    ess = _ess(n_post, len(paths), paths[0].dt, sigma_min)
    return _build_report(np.atleast_2d(emp), A, C, sigma0, ess)


def stationary_covariance_ensemble(res: LinearReservoir, sigma0: float,
                                   dt: float, t_final: float, burn_in: float,
                                   n_paths: int, seed) -> CovarianceReport:
    """Streaming ensemble estimate of the OU stationary covariance.

    Runs `n_paths` zero-input noisy reservoirs simultaneously and
    accumulates second moments after burn-in without storing paths,
    so effective sample counts of 1e6+ stay cheap.
    """
    _check_guard(dt, res.sigma_max)
    if burn_in < 10.0 / res.sigma_min:
        raise ValueError(
            f"burn_in must be >= 10/sigma_min = {10.0 / res.sigma_min:.3g}")
    rng, _ = _rng_and_seed(seed)
    N = res.state_dim
    d = res.input_dim
    n_steps = int(round(t_final / dt))
    burn_steps = int(round(burn_in / dt))
    A, C = res.A, res.C
    sqdt = np.sqrt(dt)
    X = np.zeros((n_paths, N))
    acc = np.zeros((N, N))
    mean_acc = np.zeros(N)
    count = 0
    for k in range(n_steps):
        noise = rng.standard_normal((n_paths, d))
        X = X - (X @ A) * dt + (sigma0 * sqdt) * (noise @ C.T)
        if k >= burn_steps:
            acc += X.T @ X
            mean_acc += X.sum(axis=0)
            count += n_paths
    if count == 0:
        raise ValueError("t_final leaves no samples after burn_in")
    mean = mean_acc / count
    emp = acc / count - np.outer(mean, mean)
    ess = _ess(n_steps - burn_steps, n_paths, dt, res.sigma_min)
    return _build_report(emp, A, C, sigma0, ess)


def covariance_report_to_json(report: CovarianceReport) -> str:
    obj = {
        "sigma0": report.sigma0,
        "empirical": report.empirical.ravel().tolist(),
        "lyapunov": report.lyapunov.ravel().tolist(),
        "paper_candidate": report.paper_candidate.ravel().tolist(),
        "dim": report.empirical.shape[0],
        "dist_lyapunov": report.dist_lyapunov,
        "dist_paper_candidate": report.dist_paper_candidate,
        "effective_samples": report.effective_samples,
        "insufficient_samples": report.insufficient_samples,
    }
    return json.dumps(obj, sort_keys=True)
