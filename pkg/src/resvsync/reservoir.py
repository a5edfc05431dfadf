"""Reservoir vector fields, driven simulation, and contraction certificates.

Three reservoir families are provided: the linear field -A x + C z with
symmetric positive definite A, the leaky-integrator tanh network, and
the planar sinusoid map used in the multiple-synchronisation
experiment. A reservoir is driven by observations of a source orbit;
source and reservoir are co-integrated as one augmented ODE so the
drive signal is never interpolated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import (
    DEFAULT_CONFIG,
    IntegratorConfig,
    SourceSystem,
    Trajectory,
    _solve,
)

__all__ = [
    "LinearReservoir",
    "LeakyESN",
    "SinusoidReservoir",
    "DrivenSignal",
    "ContractionCertificate",
    "StabilityProbe",
    "drive",
    "drive_many",
    "drive_with_source",
    "jacobian_x",
    "contraction_certificate",
    "stability_probe",
    "model_to_json",
    "model_from_json",
]


@dataclass(frozen=True, eq=False)
class LinearReservoir:
    """Linear reservoir x' = -A x + C z with A symmetric positive definite.

    A must be symmetric to 1e-12 (relative to its largest entry) and
    have strictly positive spectrum; this guarantees contraction at
    rate sigma_min.
    """

    A: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if np.abs(A - A.T).max() > 1.0e-12 * (1.0 + np.abs(A).max()):
            raise ValueError("A must be symmetric")
        if C.ndim == 1:
            C = C.reshape(-1, 1)
        if C.shape[0] != A.shape[0]:
            raise ValueError("C must have N rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        if self.eigenvalues[0] <= 0:
            raise ValueError("A must be positive definite")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.A)

    @property
    def sigma_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def sigma_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.C.shape[1]

    def field(self, x, z) -> np.ndarray:
        return -self.A @ x + self.C @ np.atleast_1d(z)

    def jacobian_x(self, x=None, z=None) -> np.ndarray:
        return -self.A


@dataclass(frozen=True, eq=False)
class LeakyESN:
    """Leaky-integrator network x' = -alpha x + tanh(A x + C z + b)."""

    alpha: float
    A: np.ndarray
    C: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("leak rate alpha must be positive")
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if C.ndim == 1:
            C = C.reshape(-1, 1)
        if A.shape[0] != A.shape[1] or C.shape[0] != A.shape[0] or b.shape != (A.shape[0],):
            raise ValueError("inconsistent A, C, b shapes")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "b", b)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.C.shape[1]

    def field(self, x, z) -> np.ndarray:
        return -self.alpha * x + np.tanh(self.A @ x + self.C @ np.atleast_1d(z) + self.b)

    def jacobian_x(self, x, z) -> np.ndarray:
        pre = self.A @ x + self.C @ np.atleast_1d(z) + self.b
        return -self.alpha * np.eye(self.state_dim) + (1.0 / np.cosh(pre) ** 2)[:, None] * self.A


@dataclass(frozen=True)
class SinusoidReservoir:
    """Planar reservoir (x', y') = (sin 2pi x + lam sin z, sin 2pi y + lam cos z).

    Scalar input; admits several disjoint invariant boxes, one
    synchronisation per box.
    """

    lam: float = 1.0

    @property
    def state_dim(self) -> int:
        return 2

    @property
    def input_dim(self) -> int:
        return 1

    def field(self, x, z) -> np.ndarray:
        z = float(np.atleast_1d(z)[0])
        return np.array([
            np.sin(2.0 * np.pi * x[0]) + self.lam * np.sin(z),
            np.sin(2.0 * np.pi * x[1]) + self.lam * np.cos(z),
        ])

    def jacobian_x(self, x, z=None) -> np.ndarray:
        return np.diag(2.0 * np.pi * np.cos(2.0 * np.pi * np.asarray(x)))


@dataclass(frozen=True, eq=False)
class DrivenSignal:
    """Observation of a source orbit: z(t) = omega(phi^{t + t_offset} anchor)."""

    source: SourceSystem
    omega: Callable[[np.ndarray], np.ndarray]
    anchor: np.ndarray
    t_offset: float = 0.0

    def __post_init__(self):
        anchor = np.asarray(self.anchor, dtype=float)
        if anchor.shape != (self.source.dimension,):
            raise ValueError("anchor dimension mismatch")
        object.__setattr__(self, "anchor", anchor)
        z0 = np.atleast_1d(self.omega(anchor))
        if not np.isfinite(z0).all():
            raise ValueError("omega(anchor) is not finite")

    @property
    def input_dim(self) -> int:
        return len(np.atleast_1d(self.omega(self.anchor)))


@dataclass(frozen=True, eq=False)
class ContractionCertificate:
    """Sample-based check of the uniform contraction condition.

    `max_quadratic_form` is the largest eigenvalue of the symmetrised
    state derivative over all sampled (state, input) pairs. A true
    verdict means no counterexample was found among the samples; it is
    an empirical certificate, not a proof.
    """

    max_quadratic_form: float
    delta: float
    n_state_samples: int
    n_input_samples: int
    verdict: bool


@dataclass(frozen=True, eq=False)
class StabilityProbe:
    """Separation of two driven solutions and its fitted decay rate.

    The exponential fit log d(t) = log K - rate * t uses the second
    half of the window only, discarding the transient.
    """

    times: np.ndarray
    distances: np.ndarray
    rate: float
    amplitude: float
    fit_residual: float

    def bound_at(self, t: float) -> float:
        return self.amplitude * float(np.exp(-self.rate * t))


def _augmented_rhs(model, signal, n_copies):
    q = signal.source.dimension
    N = model.state_dim
    src_rhs = signal.source.rhs
    omega = signal.omega

    def rhs(_, y):
        m = y[:q]
        z = omega(m)
        out = [np.asarray(src_rhs(m), dtype=float)]
        for k in range(n_copies):
            x = y[q + k * N: q + (k + 1) * N]
            out.append(model.field(x, z))
        return np.concatenate(out)

    return rhs


class _Slice:
    """Dense-output view of one block of an augmented solution."""

    def __init__(self, sol, lo, hi):
        self._sol = sol
        self._lo = lo
        self._hi = hi

    def __call__(self, t):
        return self._sol(t)[self._lo:self._hi]


def drive_many(model, signal: DrivenSignal, x0_list, t0: float, t1: float,
               cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Drive several reservoir copies by one shared source orbit.

    Returns (source_trajectory, [reservoir_trajectories]); all share
    the same accepted-step times.
    """
    q = signal.source.dimension
    N = model.state_dim
    x0s = [np.asarray(x, dtype=float) for x in x0_list]
    for x in x0s:
        if x.shape != (N,):
            raise ValueError(f"reservoir initial state must have shape ({N},)")
    if signal.input_dim != model.input_dim:
        raise ValueError("signal and model input dimensions disagree")
    m0 = signal.anchor
    if signal.t_offset != 0.0:
        from .dynamics import flow

        m0 = flow(signal.source, m0, signal.t_offset, cfg)
    if t1 == t0:
        src = Trajectory(np.array([t0]), m0[None, :])
        return src, [Trajectory(np.array([t0]), x[None, :]) for x in x0s]
    if t1 < t0:
        raise ValueError("drive requires t1 >= t0")
    y0 = np.concatenate([m0] + x0s)
    sol = _solve(_augmented_rhs(model, signal, len(x0s)), float(t0), float(t1), y0, cfg)
    src = Trajectory(sol.t, sol.y[:q].T, interpolant=_Slice(sol.sol, 0, q))
    res = [
        Trajectory(sol.t, sol.y[q + k * N: q + (k + 1) * N].T,
                   interpolant=_Slice(sol.sol, q + k * N, q + (k + 1) * N))
        for k in range(len(x0s))
    ]
    return src, res


def drive(model, signal: DrivenSignal, x0, t0: float, t1: float,
          cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Driven reservoir trajectory x' = F(x, z(t)) from x(t0) = x0."""
    _, res = drive_many(model, signal, [x0], t0, t1, cfg)
    return res[0]


def drive_with_source(model, signal: DrivenSignal, x0, t0: float, t1: float,
                      cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Like `drive` but also returns the co-integrated source trajectory."""
    src, res = drive_many(model, signal, [x0], t0, t1, cfg)
    return src, res[0]


def jacobian_x(model, x, z) -> np.ndarray:
    """State derivative D_x F(x, z) of the reservoir field (analytic)."""
    return model.jacobian_x(np.asarray(x, dtype=float), z)


def contraction_certificate(model, state_samples, input_samples) -> ContractionCertificate:
    """Maximise the contraction quadratic form over sampled pairs.

    For every sampled state w and input z the largest eigenvalue of
    (D_x F + D_x F^T)/2 bounds v^T D_x F v / ||v||^2 over directions v.
    The verdict is true iff the sampled maximum is negative; delta is
    its negation.
    """
    states = [np.asarray(w, dtype=float) for w in state_samples]
    inputs = [np.atleast_1d(z) for z in input_samples]
    if not states or not inputs:
        raise ValueError("state and input samples must be nonempty")
    worst = -np.inf
    for w in states:
        for z in inputs:
            D = model.jacobian_x(w, z)
            S = 0.5 * (D + D.T)
            worst = max(worst, float(np.linalg.eigvalsh(S)[-1]))
    return ContractionCertificate(
        max_quadratic_form=worst,
        delta=-worst,
        n_state_samples=len(states),
        n_input_samples=len(inputs),
        verdict=bool(worst < 0),
    )


def stability_probe(model, signal: DrivenSignal, x0, y0, t1: float,
                    cfg: IntegratorConfig = DEFAULT_CONFIG) -> StabilityProbe:
    """Track the separation of two driven solutions and fit its decay.

    Both copies see the identical source orbit. Times where the
    separation has underflowed to zero are excluded from the fit; if
    fewer than two usable points remain the rate is reported as inf.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    _, (tx, ty) = drive_many(model, signal, [x0, y0], 0.0, t1, cfg)
    d = np.linalg.norm(tx.states - ty.states, axis=1)
    times = tx.times
    half = times[0] + 0.5 * (times[-1] - times[0])
    mask = (times >= half) & (d > 0.0)
    if (d == 0.0).all():
        return StabilityProbe(times, d, np.inf, 0.0, 0.0)
    if mask.sum() < 2:
        return StabilityProbe(times, d, np.inf, float(d.max()), 0.0)
    coef = np.polyfit(times[mask], np.log(d[mask]), 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, times[mask]) - np.log(d[mask])) ** 2)))
    return StabilityProbe(
        times=times,
        distances=d,
        rate=float(-coef[0]),
        amplitude=float(np.exp(coef[1])),
        fit_residual=resid,
    )


def model_to_json(model) -> str:
    """Serialise a reservoir model to the row-major JSON wire format."""
    if isinstance(model, LinearReservoir):
        obj = {
            "type": "linear",
            "dims": {"N": model.state_dim, "d": model.input_dim},
            "A": model.A.ravel().tolist(),
            "C": model.C.ravel().tolist(),
            "params": {},
        }
    elif isinstance(model, LeakyESN):
        obj = {
            "type": "leaky_esn",
            "dims": {"N": model.state_dim, "d": model.input_dim},
            "A": model.A.ravel().tolist(),
            "C": model.C.ravel().tolist(),
            "b": model.b.tolist(),
            "params": {"alpha": model.alpha},
        }
    elif isinstance(model, SinusoidReservoir):
        obj = {
            "type": "sinusoid",
            "dims": {"N": 2, "d": 1},
            "params": {"lambda": model.lam},
        }
    else:
        raise TypeError(f"unknown model type {type(model).__name__}")
    return json.dumps(obj, sort_keys=True)


def model_from_json(text: str):
    obj = json.loads(text)
    kind = obj["type"]
    if kind == "linear":
        N, d = obj["dims"]["N"], obj["dims"]["d"]
        return LinearReservoir(
            np.array(obj["A"]).reshape(N, N),
            np.array(obj["C"]).reshape(N, d),
        )
    if kind == "leaky_esn":
        N, d = obj["dims"]["N"], obj["dims"]["d"]
        return LeakyESN(
            obj["params"]["alpha"],
            np.array(obj["A"]).reshape(N, N),
            np.array(obj["C"]).reshape(N, d),
            np.array(obj["b"]),
        )
    if kind == "sinusoid":
        return SinusoidReservoir(obj["params"]["lambda"])
    raise ValueError(f"unknown model type {kind!r}")
