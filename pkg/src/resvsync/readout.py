"""Random-feature readouts, the autonomous closed loop, and variance scaling.

The readout approximates a scalar function of the reservoir state by
y(x) = (1/D) sum_i w_i tanh(alpha_i^T x + beta_i) with randomly drawn
(alpha_i, beta_i) and trained w. Feeding the prediction back in place
of the observation closes the loop, and the closed-loop Jacobian at the
reservoir image of a source fixed point is compared against the source
Jacobian spectrum. `clt_experiment` measures the 1/D variance scaling
of such random-feature estimators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import DEFAULT_CONFIG, IntegratorConfig, SourceSystem, Trajectory, integrate
from .reservoir import LinearReservoir

__all__ = [
    "FeatureBank",
    "ReadoutWeights",
    "ClosedLoopSystem",
    "CLTReport",
    "EigMatchReport",
    "sample_features",
    "features_apply",
    "features_grad",
    "fit_readout",
    "closed_loop_jacobian",
    "closed_loop_integrate",
    "clt_experiment",
    "tanh_feature_family",
    "eig_compare",
]


@dataclass(frozen=True, eq=False)
class FeatureBank:
    """D random tanh neurons with entries drawn from U[-0.5, 0.5]."""

    weights: np.ndarray  # (D, N)
    biases: np.ndarray  # (D,)
    seed: Optional[int] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.biases, dtype=float)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError("weights must be (D, N) with matching biases")
        if np.abs(w).max() > 0.5 + 1e-15 or np.abs(b).max() > 0.5 + 1e-15:
            raise ValueError("feature entries must lie in [-0.5, 0.5]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def state_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    """Trained combination weights and the achieved training loss."""

    w: np.ndarray
    damp: float
    residual: float

    def __post_init__(self):
        if self.damp < 0 or self.residual < 0:
            raise ValueError("damp and residual must be nonnegative")


def sample_features(D: int, N: int, rng) -> FeatureBank:
    """Draw a feature bank with i.i.d. U[-0.5, 0.5] entries."""
    if D < 1 or N < 1:
        raise ValueError("D and N must be >= 1")
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = np.random.default_rng(seed)
    weights = rng.uniform(-0.5, 0.5, (D, N))
    biases = rng.uniform(-0.5, 0.5, D)
    return FeatureBank(weights, biases, seed=seed)


def features_apply(bank: FeatureBank, x) -> np.ndarray:
    """Feature vector tanh(alpha_i^T x + beta_i), shape (D,)."""
    return np.tanh(bank.weights @ np.asarray(x, dtype=float) + bank.biases)


def features_grad(bank: FeatureBank, x) -> np.ndarray:
    """Gradient rows sech^2(alpha_i^T x + beta_i) alpha_i^T, shape (D, N)."""
    pre = bank.weights @ np.asarray(x, dtype=float) + bank.biases
    return (1.0 / np.cosh(pre) ** 2)[:, None] * bank.weights


def _design(bank: FeatureBank, states: np.ndarray) -> np.ndarray:
    """Scaled design matrix Phi with Phi @ w = prediction, shape (l, D)."""
    return np.tanh(states @ bank.weights.T + bank.biases) / bank.size


def fit_readout(bank: FeatureBank, states, targets, damp: float = 0.0) -> ReadoutWeights:
    """Least-squares fit of (1/l) sum_j |xi_j - y(x_j)|^2 + damp^2 |w|^2 / D^2.

    Solved by SVD-based least squares on the scaled design; the
    minimal-norm minimiser is returned when the design is numerically
    rank deficient. damp > 0 augments the system with the equivalent
    ridge rows.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 1:
        raise ValueError("targets must be scalar per sample")
    ell = len(targets)
    if ell == 0:
        raise ValueError("cannot fit a readout to zero samples")
    if states.shape != (ell, bank.state_dim):
        raise ValueError("states must be (l, N) aligned with targets")
    Phi = _design(bank, states)
    if damp > 0:
        # loss * l: ||xi - Phi w||^2 + (l damp^2 / D^2) ||w||^2
        mu = np.sqrt(ell) * damp / bank.size
        Aug = np.vstack([Phi, mu * np.eye(bank.size)])
        rhs = np.concatenate([targets, np.zeros(bank.size)])
        w, *_ = np.linalg.lstsq(Aug, rhs, rcond=None)
    else:
        w, *_ = np.linalg.lstsq(Phi, targets, rcond=None)
    resid = float(np.mean((targets - Phi @ w) ** 2)
                  + damp ** 2 * (w @ w) / bank.size ** 2)
    return ReadoutWeights(w=w, damp=float(damp), residual=resid)


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """Autonomous reservoir x' = -A x + C y(x) with a trained readout."""

    reservoir: LinearReservoir
    bank: FeatureBank
    weights: ReadoutWeights

    def __post_init__(self):
        if self.reservoir.input_dim != 1:
            raise ValueError("closed loop requires scalar observations")
        if self.bank.state_dim != self.reservoir.state_dim:
            raise ValueError("feature bank dimension mismatch")

    @property
    def state_dim(self) -> int:
        return self.reservoir.state_dim

    def predict(self, x) -> float:
        return float(self.weights.w @ features_apply(self.bank, x)) / self.bank.size

    def field(self, x) -> np.ndarray:
        return -self.reservoir.A @ x + self.reservoir.C[:, 0] * self.predict(x)


def closed_loop_jacobian(sys: ClosedLoopSystem, x) -> np.ndarray:
    """Exact Jacobian -A + C grad y(x)^T of the autonomous field."""
    g = (sys.weights.w @ features_grad(sys.bank, x)) / sys.bank.size
    return -sys.reservoir.A + np.outer(sys.reservoir.C[:, 0], g)


def closed_loop_integrate(sys: ClosedLoopSystem, x0, t0: float, t1: float,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate the autonomous closed loop like any other source system."""
    auto = SourceSystem(
        dimension=sys.state_dim,
        rhs=sys.field,
        jac=lambda x: closed_loop_jacobian(sys, x),
        name="closed_loop",
    )
    return integrate(auto, x0, t0, t1, cfg)


@dataclass(frozen=True, eq=False)
class CLTReport:
    """Variance of the random-feature estimator across bank sizes.

    For target u(x) = E[w(theta) h(x, theta)] the estimator error has
    variance sigma^2(x)/D, so the fitted log-log slope should be -1.
    """

    x: np.ndarray
    u_ref: float
    sigma2_ref: float
    d_list: np.ndarray
    variances: np.ndarray
    mean_errors: np.ndarray
    trials: int
    slope: float


def tanh_feature_family(N: int):
    """The tanh neuron family with U[-0.5,0.5]^(N+1) parameters.

    Returns (h, sampler) with h(x, thetas) vectorised over a (n, N+1)
    parameter block whose last column is the bias.
    """

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-0.5, 0.5, (n, N + 1))

    def h(x: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        return np.tanh(thetas[:, :N] @ x + thetas[:, N])

    return h, sampler


def clt_experiment(h, weight_fn, theta_sampler, x, d_list, trials: int,
                   rng: np.random.Generator,
                   reference_samples: int = 1_000_000,
                   reference_seed: int = 20_252_025) -> CLTReport:
    """Empirical variance of u(x) - (1/D) sum w(theta_i) h(x, theta_i).

    The reference mean u(x) and variance sigma^2(x) are Monte-Carlo
    estimates from `reference_samples` draws under a fixed oracle seed,
    independent of the sweep generator.
    """
    x = np.asarray(x, dtype=float)
    d_list = np.asarray(d_list, dtype=int)
    if trials < 2:
        raise ValueError("need at least 2 trials for a variance")
    oracle = np.random.default_rng(reference_seed)
    vals = np.empty(reference_samples)
    done = 0
    while done < reference_samples:  # chunked to bound memory
        n = min(200_000, reference_samples - done)
        thetas = theta_sampler(oracle, n)
        vals[done:done + n] = np.asarray(weight_fn(thetas)) * h(x, thetas)
        done += n
    u_ref = float(vals.mean())
    sigma2_ref = float(vals.var())

    variances = np.empty(len(d_list))
    mean_errors = np.empty(len(d_list))
    for i, D in enumerate(d_list):
        errs = np.empty(trials)
        for k in range(trials):
            thetas = theta_sampler(rng, int(D))
            errs[k] = u_ref - float(np.mean(np.asarray(weight_fn(thetas)) * h(x, thetas)))
        variances[i] = errs.var()
        mean_errors[i] = errs.mean()
    if (variances > 0).all():
        slope = float(np.polyfit(np.log(d_list), np.log(variances), 1)[0])
    else:
        slope = 0.0  # degenerate estimator (e.g. zero weights)
    return CLTReport(
        x=x,
        u_ref=u_ref,
        sigma2_ref=sigma2_ref,
        d_list=d_list,
        variances=variances,
        mean_errors=mean_errors,
        trials=trials,
        slope=slope,
    )


@dataclass(frozen=True, eq=False)
class EigMatchReport:
    """Greedy pairing of source eigenvalues with closed-loop eigenvalues.

    Pairs are chosen globally nearest-first with each closed-loop
    eigenvalue used at most once, so the result does not depend on the
    input ordering.
    """

    source_eigs: np.ndarray
    closed_eigs: np.ndarray
    matched: np.ndarray
    distances: np.ndarray

    @property
    def max_distance(self) -> float:
        return float(self.distances.max())


def eig_compare(J_closed: np.ndarray, J_source: np.ndarray) -> EigMatchReport:
    """Match each source eigenvalue to its nearest closed-loop eigenvalue."""
    closed = np.linalg.eigvals(np.asarray(J_closed, dtype=float))
    source = np.linalg.eigvals(np.asarray(J_source, dtype=float))
    if len(closed) < len(source):
        raise ValueError("closed-loop spectrum has too few eigenvalues")
    dist = np.abs(source[:, None] - closed[None, :])
    matched = np.zeros(len(source), dtype=complex)
    distances = np.zeros(len(source))
    src_left = list(range(len(source)))
    cl_left = list(range(len(closed)))
    while src_left:
        sub = dist[np.ix_(src_left, cl_left)]
        i, j = np.unravel_index(np.argmin(sub), sub.shape)
        si, cj = src_left[i], cl_left[j]
        matched[si] = closed[cj]
        distances[si] = dist[si, cj]
        src_left.remove(si)
        cl_left.remove(cj)
    return EigMatchReport(
        source_eigs=source,
        closed_eigs=closed,
        matched=matched,
        distances=distances,
    )
