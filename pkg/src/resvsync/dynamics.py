"""Deterministic flows: ODE integration, Jacobians, and tangent (variational) flow.

A source system is a smooth vector field on R^q. Everything downstream
(driven reservoirs, generalised-synchronisation quadrature, embedding
checks) consumes the operations here: `integrate`, `flow`, `jacobian`,
`tangent_flow`, and the hypothesis probe `growth_probe`. Two concrete
systems are provided: planar rotation (`circle`) and the Lorenz-63
equations (`lorenz63`).

Backward-time evaluation (`t1 < t0`) is supported throughout; note that
backward Lorenz orbits blow up quickly and raise `DivergenceError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "DIVERGENCE_NORM",
    "DivergenceError",
    "IntegratorConfig",
    "SourceSystem",
    "Trajectory",
    "GrowthBoundReport",
    "integrate",
    "flow",
    "jacobian",
    "tangent_flow",
    "growth_probe",
    "lorenz63",
    "circle",
]

# Abort integration once the state norm passes this; backward chaotic
# orbits reach it in O(1) time and must fail loudly instead of hanging.
DIVERGENCE_NORM = 1.0e6


class DivergenceError(RuntimeError):
    """Raised when an orbit blows up or the step size underflows.

    Attributes
    ----------
    last_time : float
        Last time at which a valid state is available.
    last_state : ndarray
        The state at `last_time`.
    """

    def __init__(self, message, last_time, last_state):
        super().__init__(message)
        self.last_time = float(last_time)
        self.last_state = np.asarray(last_state, dtype=float)


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings for the embedded Runge-Kutta 5(4) integrator.

    Defaults reproduce the tolerance regime used by the Lorenz
    reconstruction experiment (rtol=1e-9). The finite default max_step
    keeps steps inside the oscillatory stability region near
    equilibria, where unbounded steps would amplify the float-rounding
    residual of a fixed point up to the tolerance band.
    """

    rtol: float = 1.0e-9
    atol: float = 1.0e-12
    max_step: float = 0.25
    method: str = "RK45"

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True, eq=False)
class SourceSystem:
    """A vector field on R^q with optional analytic Jacobian and fixed points.

    Parameters
    ----------
    dimension : int
        State dimension q.
    rhs : callable
        Vector field, state -> state.
    jac : callable, optional
        Analytic Jacobian, state -> (q, q). Central finite differences
        are used when absent.
    fixed_points : sequence of (name, state)
        Named stationary points; each must satisfy
        ||rhs(p)|| <= 1e-10 * (1 + ||p||).
    name : str
        Short identifier used in exports.
    """

    dimension: int
    rhs: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fixed_points: tuple = ()
    name: str = "system"

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        for label, p in self.fixed_points:
            p = np.asarray(p, dtype=float)
            r = np.linalg.norm(np.asarray(self.rhs(p), dtype=float))
            if r > 1.0e-10 * (1.0 + np.linalg.norm(p)):
                raise ValueError(
                    f"claimed fixed point {label!r} has residual {r:.3e}"
                )

    def fixed_point(self, label: str) -> np.ndarray:
        for name, p in self.fixed_points:
            if name == label:
                return np.asarray(p, dtype=float).copy()
        raise KeyError(label)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution samples at the integrator's accepted steps.

    `times` is strictly increasing for forward runs and strictly
    decreasing for backward runs; `states` has one row per time.
    A dense interpolant covering the integration span is kept so orbits
    can be evaluated on arbitrary grids via `at`.
    """

    times: np.ndarray
    states: np.ndarray
    interpolant: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or len(times) != len(states) or len(times) < 1:
            raise ValueError("times and states must align and be nonempty")
        if len(times) > 1:
            dt = np.diff(times)
            if not ((dt > 0).all() or (dt < 0).all()):
                raise ValueError("times must be strictly monotonic")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def at(self, t) -> np.ndarray:
        """Dense-output state at time(s) t, shape (q,) or (q, n)."""
        if self.interpolant is None:
            raise ValueError("trajectory carries no dense interpolant")
        return self.interpolant(t)

    def to_csv(self, path) -> None:
        from .io import write_csv

        q = self.states.shape[1]
        header = ["t"] + [f"x{i}" for i in range(q)]
        write_csv(path, header, np.column_stack([self.times, self.states]))


@dataclass(frozen=True, eq=False)
class GrowthBoundReport:
    """Log-linear fit of backward tangent-flow growth.

    Fits sup_m ||T_m phi^{-t}|| ~ K * exp(c * sigma_min * t) over the
    probed samples and time grid. `hypothesis_ok` is False when the
    fitted c is >= 1, i.e. the backward expansion outruns the reservoir
    contraction rate and the differentiability hypothesis fails.
    """

    sample_points: np.ndarray
    t_grid: np.ndarray
    norms: np.ndarray  # (n_samples, n_times)
    sup_norms: np.ndarray  # (n_times,)
    K: float
    c: float
    sigma_min: float
    fit_residual: float
    hypothesis_ok: bool
    diverged: bool = False


def _solve(rhs, t0, t1, y0, cfg, guard_dim=None):
    """Run solve_ivp with divergence detection; raises DivergenceError.

    Only the first `guard_dim` components count toward the norm guard,
    so auxiliary variables (variational matrices) may grow legitimately.
    The guard also watches the field norm: blow-ups that spiral while
    growing would otherwise take millions of steps to reach the state
    threshold.
    """
    guard_dim = len(y0) if guard_dim is None else guard_dim

    def guard(t, y):
        speed = np.linalg.norm(np.asarray(rhs(t, y))[:guard_dim])
        return max(np.linalg.norm(y[:guard_dim]), speed) - DIVERGENCE_NORM

    guard.terminal = True
    sol = solve_ivp(
        rhs,
        (t0, t1),
        y0,
        method=cfg.method,
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=cfg.max_step,
        dense_output=True,
        events=guard,
    )
    if sol.status == 1:  # terminated by the norm guard
        raise DivergenceError(
            f"orbit diverged (||state|| > {DIVERGENCE_NORM:g}) at t={sol.t[-1]:.6g}",
            sol.t[-1],
            sol.y[:, -1],
        )
    if not sol.success:
        raise DivergenceError(
            f"integrator failed at t={sol.t[-1]:.6g}: {sol.message}",
            sol.t[-1],
            sol.y[:, -1],
        )
    return sol


def integrate(system: SourceSystem, x0, t0: float, t1: float,
              cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate the system from t0 to t1 (t1 < t0 runs backward).

    Returns the trajectory at accepted steps together with a dense
    interpolant. The last state approximates the flow of x0 by t1 - t0.

    Raises
    ------
    DivergenceError
        If the orbit norm passes `DIVERGENCE_NORM` or the step size
        underflows; the error carries the last valid time and state.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (system.dimension,):
        raise ValueError(f"x0 must have shape ({system.dimension},)")
    if t0 == t1:
        raise ValueError("t0 and t1 must differ; use flow for t=0")
    sol = _solve(lambda t, y: np.asarray(system.rhs(y), dtype=float),
                 float(t0), float(t1), x0, cfg)
    return Trajectory(sol.t, sol.y.T, interpolant=sol.sol)


def flow(system: SourceSystem, m, t: float,
         cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Evolve the point m by time t (negative t flows backward)."""
    m = np.asarray(m, dtype=float)
    if t == 0.0:
        return m.copy()
    return integrate(system, m, 0.0, float(t), cfg).final_state


def jacobian(system: SourceSystem, m) -> np.ndarray:
    """Jacobian of the vector field at m.

    Uses the analytic Jacobian when the system provides one, otherwise
    central finite differences with step h = 1e-6 * (1 + ||m||).
    """
    m = np.asarray(m, dtype=float)
    if system.jac is not None:
        return np.asarray(system.jac(m), dtype=float)
    q = system.dimension
    h = 1.0e-6 * (1.0 + np.linalg.norm(m))
    J = np.empty((q, q))
    for j in range(q):
        e = np.zeros(q)
        e[j] = h
        fp = np.asarray(system.rhs(m + e), dtype=float)
        fm = np.asarray(system.rhs(m - e), dtype=float)
        J[:, j] = (fp - fm) / (2.0 * h)
    return J


def tangent_flow(system: SourceSystem, m, t: float,
                 cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Differential of the time-t flow at m.

    Integrates the variational equation M' = J(phi^s m) M alongside the
    orbit, M(0) = I. At a fixed point this equals expm(J t).
    """
    m = np.asarray(m, dtype=float)
    q = system.dimension
    if t == 0.0:
        return np.eye(q)

    def rhs(_, y):
        state = y[:q]
        M = y[q:].reshape(q, q)
        dM = jacobian(system, state) @ M
        return np.concatenate([np.asarray(system.rhs(state), dtype=float),
                               dM.ravel()])

    y0 = np.concatenate([m, np.eye(q).ravel()])
    sol = _solve(rhs, 0.0, float(t), y0, cfg, guard_dim=q)
    return sol.y[q:, -1].reshape(q, q)


def growth_probe(system: SourceSystem, sample_points, t_grid, sigma_min: float,
                 cfg: IntegratorConfig = DEFAULT_CONFIG) -> GrowthBoundReport:
    """Estimate the backward tangent-flow growth envelope.

    Computes ||T_m phi^{-t}||_2 for every sample and t in the grid,
    takes the sup over samples, and fits log sup-norm against t. The
    fitted rate is reported as c relative to sigma_min. If backward
    integration diverges at some t, the grid is truncated there and the
    report is flagged partial.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if not (t_grid > 0).all() or not (np.diff(t_grid) > 0).all():
        raise ValueError("t_grid must be positive and increasing")
    if not sigma_min > 0:
        raise ValueError("sigma_min must be positive")
    samples = [np.asarray(p, dtype=float) for p in sample_points]
    norms = np.full((len(samples), len(t_grid)), np.nan)
    diverged = False
    for i, p in enumerate(samples):
        for j, t in enumerate(t_grid):
            try:
                norms[i, j] = np.linalg.norm(tangent_flow(system, p, -t, cfg), 2)
            except DivergenceError:
                diverged = True
                break
    valid = ~np.isnan(norms).all(axis=0)
    if not valid.any():
        raise DivergenceError("no backward tangent flow could be computed",
                              0.0, samples[0])
    tg = t_grid[valid]
    sup = np.nanmax(norms[:, valid], axis=0)
    # log sup ||T|| = log K + (c sigma_min) t
    coef = np.polyfit(tg, np.log(sup), 1)
    c = coef[0] / sigma_min
    K = float(np.exp(coef[1]))
    resid = float(np.sqrt(np.mean((np.polyval(coef, tg) - np.log(sup)) ** 2)))
    return GrowthBoundReport(
        sample_points=np.asarray(samples),
        t_grid=tg,
        norms=norms[:, valid],
        sup_norms=sup,
        K=K,
        c=float(c),
        sigma_min=float(sigma_min),
        fit_residual=resid,
        hypothesis_ok=bool(c < 1.0),
        diverged=diverged,
    )


def lorenz63() -> SourceSystem:
    """Lorenz-63 system with parameters (10, 28, 8/3).

    Registers the nontrivial fixed point m* = (6 sqrt 2, 6 sqrt 2, 27).
    """
    s = 6.0 * math.sqrt(2.0)

    def rhs(y):
        x, v, z = y
        return np.array([10.0 * (v - x), x * (28.0 - z) - v, x * v - (8.0 / 3.0) * z])

    def jac(y):
        x, v, z = y
        return np.array([
            [-10.0, 10.0, 0.0],
            [28.0 - z, -1.0, -x],
            [v, x, -8.0 / 3.0],
        ])

    mstar = np.array([s, s, 27.0])
    return SourceSystem(3, rhs, jac, (("m*", mstar),), name="lorenz63")


def circle() -> SourceSystem:
    """Planar rotation u' = -v, v' = u (unit angular speed)."""

    def rhs(y):
        return np.array([-y[1], y[0]])

    def jac(_):
        return np.array([[0.0, -1.0], [1.0, 0.0]])

    return SourceSystem(2, rhs, jac, (("origin", np.zeros(2)),), name="circle")
