"""Random reservoir generation and fixed-point embedding checks.

A linear reservoir embeds the source fixed points when (1) the source
Jacobian eigenvalues are distinct and (2) the complex vectors
(A + lambda_j I)^{-1} C are linearly independent. Both conditions are
checked numerically here, and `monte_carlo_embedding_rate` measures how
often they hold across random draws; for generic draws the success
fraction is 1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .reservoir import LinearReservoir

__all__ = [
    "RandomReservoirSpec",
    "EmbeddingReport",
    "MonteCarloReport",
    "SpectralCollisionError",
    "haar_orthogonal",
    "generate_reservoir",
    "check_distinct_eigs",
    "check_independence",
    "monte_carlo_embedding_rate",
    "report_to_json",
    "sweep_to_csv",
]

logger = logging.getLogger(__name__)

RANK_TOL = 1.0e-8
DISTINCT_TOL = 1.0e-9
_EIG_FLOOR = 1.0e-6  # resample eigenvalues below this to keep A invertible


class SpectralCollisionError(ValueError):
    """A probe eigenvalue coincides with the spectrum of -A."""


@dataclass(frozen=True)
class RandomReservoirSpec:
    """Recipe for a random linear reservoir.

    A = Q diag(u) Q^T * scale with u_i ~ U[0,1] and Q Haar-orthogonal;
    C entries ~ U[-0.5, 0.5]. Deterministic per seed.
    """

    N: int
    scale: float = 30.0
    input_dim: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True, eq=False)
class EmbeddingReport:
    """Outcome of the two embedding conditions for one reservoir.

    verdict = distinct and (rank == q); rank is the number of singular
    values of the stacked columns above RANK_TOL relative to the
    largest.
    """

    eigenvalues: np.ndarray
    distinct: bool
    columns: np.ndarray  # (N, q) complex
    singular_values: np.ndarray
    rank: int
    verdict: bool
    seed: Optional[int] = None

    @property
    def smallest_singular_value(self) -> float:
        return float(self.singular_values[-1]) if len(self.singular_values) else 0.0


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    """Seed-sweep summary for the independence conditions."""

    trials: int
    fraction: float
    min_singular_value: float
    seeds: np.ndarray
    ranks: np.ndarray
    sigma_mins: np.ndarray
    verdicts: np.ndarray


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def generate_reservoir(spec: RandomReservoirSpec,
                       rng: Optional[np.random.Generator] = None) -> LinearReservoir:
    """Draw the random (A, C) pair described by the spec.

    Eigenvalues below 1e-6 are redrawn (logged) so A stays safely
    invertible. Passing no generator seeds one from the spec, making
    the draw a pure function of the seed.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    evals = rng.uniform(0.0, 1.0, spec.N)
    for i in range(spec.N):
        while evals[i] < _EIG_FLOOR:
            logger.info("resampling near-zero eigenvalue %g (seed %s)",
                        evals[i], spec.seed)
            evals[i] = rng.uniform(0.0, 1.0)
    Q = haar_orthogonal(spec.N, rng)
    A = (Q * evals) @ Q.T * spec.scale
    A = 0.5 * (A + A.T)
    C = rng.uniform(-0.5, 0.5, (spec.N, spec.input_dim))
    return LinearReservoir(A, C)


def check_distinct_eigs(J: np.ndarray, tol: float = DISTINCT_TOL):
    """Eigenvalues of J and whether they are pairwise distinct.

    Distinctness requires |lam_i - lam_j| > tol * (1 + max |lam|) for
    every pair. Returns (distinct, eigenvalues).
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("J must be square")
    eigs = np.linalg.eigvals(J)
    scale = 1.0 + np.abs(eigs).max()
    n = len(eigs)
    distinct = all(
        abs(eigs[i] - eigs[j]) > tol * scale
        for i in range(n) for j in range(i + 1, n)
    )
    return bool(distinct), eigs


def check_independence(res: LinearReservoir, eigs, tol: float = RANK_TOL,
                       distinct_tol: float = DISTINCT_TOL,
                       seed: Optional[int] = None) -> EmbeddingReport:
    """Rank test of the vectors (A + lambda_j I)^{-1} C.

    Solves one complex linear system per eigenvalue, stacks the
    solutions as columns, and counts singular values above
    tol * sigma_max. Requires scalar input (the vectors live in C^N).

    Raises
    ------
    SpectralCollisionError
        If some lambda_j sits within 1e-12 of the spectrum of -A,
        making A + lambda_j I numerically singular.
    """
    if res.input_dim != 1:
        raise ValueError("independence test requires scalar input (d = 1)")
    eigs = np.asarray(eigs, dtype=complex)
    q = len(eigs)
    N = res.state_dim
    c = res.C[:, 0].astype(complex)
    mus = res.eigenvalues
    for lam in eigs:
        if np.min(np.abs(mus + lam)) <= 1.0e-12 * (1.0 + np.abs(mus).max()):
            raise SpectralCollisionError(
                f"eigenvalue {lam} collides with the spectrum of -A")
    cols = np.empty((N, q), dtype=complex)
    for j, lam in enumerate(eigs):
        cols[:, j] = np.linalg.solve(res.A + lam * np.eye(N), c)
    sv = np.linalg.svd(cols, compute_uv=False)
    rank = int((sv > tol * sv[0]).sum()) if sv[0] > 0 else 0
    scale = 1.0 + np.abs(eigs).max()
    distinct = all(
        abs(eigs[i] - eigs[j]) > distinct_tol * scale
        for i in range(q) for j in range(i + 1, q)
    )
    return EmbeddingReport(
        eigenvalues=eigs,
        distinct=bool(distinct),
        columns=cols,
        singular_values=sv,
        rank=rank,
        verdict=bool(distinct and rank == q),
        seed=seed,
    )


def monte_carlo_embedding_rate(spec: RandomReservoirSpec, J: np.ndarray,
                               trials: int, map_fn=map) -> MonteCarloReport:
    """Fraction of seeds spec.seed .. spec.seed+trials-1 with a true verdict.

    Each trial draws a fresh reservoir from its own seed and reruns
    `check_independence` against the eigenvalues of J. Trials are
    independent; `map_fn` may be an order-preserving parallel map.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _, eigs = check_distinct_eigs(J)
    seeds = np.arange(spec.seed, spec.seed + trials)

    def one(seed):
        trial_spec = RandomReservoirSpec(spec.N, spec.scale, spec.input_dim,
                                         int(seed))
        res = generate_reservoir(trial_spec)
        return check_independence(res, eigs, seed=int(seed))

    reports = list(map_fn(one, seeds))
    ranks = np.array([r.rank for r in reports], dtype=int)
    sigmas = np.array([r.smallest_singular_value for r in reports])
    verdicts = np.array([r.verdict for r in reports], dtype=bool)
    return MonteCarloReport(
        trials=trials,
        fraction=float(verdicts.mean()),
        min_singular_value=float(sigmas.min()),
        seeds=seeds,
        ranks=ranks,
        sigma_mins=sigmas,
        verdicts=verdicts,
    )


def report_to_json(report: EmbeddingReport) -> str:
    obj = {
        "seed": report.seed,
        "eigenvalues": [[z.real, z.imag] for z in report.eigenvalues],
        "singular_values": report.singular_values.tolist(),
        "rank": report.rank,
        "verdict": bool(report.verdict),
    }
    return json.dumps(obj, sort_keys=True)


def sweep_to_csv(path, mc: MonteCarloReport) -> None:
    from .io import write_csv

    rows = np.column_stack([mc.seeds, mc.ranks, mc.sigma_mins,
                            mc.verdicts.astype(int)])
    write_csv(path, ["seed", "rank", "sigma_min_col", "verdict"], rows,
              int_cols=(0, 1, 3))
