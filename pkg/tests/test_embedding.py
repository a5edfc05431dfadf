import math

import numpy as np
import pytest

from resvsync.embedding import (
    EmbeddingReport,
    RandomReservoirSpec,
    SpectralCollisionError,
    check_distinct_eigs,
    check_independence,
    generate_reservoir,
    haar_orthogonal,
    monte_carlo_embedding_rate,
    report_to_json,
    sweep_to_csv,
)
from resvsync.io import read_csv
from resvsync.reservoir import LinearReservoir

SQ2 = 6.0 * math.sqrt(2.0)
J_FIXED = np.array([[-10.0, 10.0, 0.0], [1.0, -1.0, -SQ2], [SQ2, SQ2, -8.0 / 3.0]])


def test_generated_reservoir_invariants():
    for seed in range(10):
        res = generate_reservoir(RandomReservoirSpec(7, seed=seed))
        assert np.abs(res.A - res.A.T).max() <= 1e-12 * (1 + np.abs(res.A).max())
        assert res.eigenvalues[0] > 0
        assert res.eigenvalues[-1] <= 30.0 + 1e-9
        assert np.abs(res.C).max() <= 0.5


def test_generation_deterministic_per_seed():
    a = generate_reservoir(RandomReservoirSpec(5, seed=42))
    b = generate_reservoir(RandomReservoirSpec(5, seed=42))
    assert a.A.tobytes() == b.A.tobytes()
    assert a.C.tobytes() == b.C.tobytes()
    c = generate_reservoir(RandomReservoirSpec(5, seed=43))
    assert a.A.tobytes() != c.A.tobytes()


def test_input_matrix_mean_is_centred():
    # CLT band: 10^4 draws of 7 U[-0.5,0.5] entries
    total, count = 0.0, 0
    for seed in range(10_000):
        res = generate_reservoir(RandomReservoirSpec(7, seed=seed))
        total += res.C.sum()
        count += res.C.size
    assert -0.01 < total / count < 0.01


def test_near_zero_eigenvalue_resampled():
    class Scripted:
        """Generator stand-in whose first uniform batch contains a zero."""

        def __init__(self):
            self.rng = np.random.default_rng(7)
            self.first = True

        def uniform(self, lo, hi, size=None):
            if self.first and isinstance(size, int):
                self.first = False
                out = self.rng.uniform(lo, hi, size)
                out[0] = 1e-9
                return out
            return self.rng.uniform(lo, hi, size)

        def standard_normal(self, size):
            return self.rng.standard_normal(size)

    res = generate_reservoir(RandomReservoirSpec(4), rng=Scripted())
    assert res.eigenvalues[0] > 1e-6 * 30 * 0.9  # floor enforced pre-scale


def test_haar_orthogonality(rng):
    q = haar_orthogonal(6, rng)
    assert np.linalg.norm(q @ q.T - np.eye(6)) < 1e-12


def test_distinct_eigs_lorenz_char_poly_oracle():
    distinct, eigs = check_distinct_eigs(J_FIXED)
    assert distinct
    # characteristic polynomial expanded by hand:
    # z^3 + (41/3) z^2 + (304/3) z + 1440
    coeffs = np.array([1.0, 41.0 / 3.0, 304.0 / 3.0, 1440.0])
    for z in eigs:
        assert abs(np.polyval(coeffs, z)) < 1e-9 * 1440
    roots = np.roots(coeffs)
    for z in eigs:
        assert np.min(np.abs(roots - z)) < 1e-10 * (1 + np.abs(roots).max())
    expect = {-13.8546, 0.0940}
    reals = {round(z.real, 4) for z in eigs}
    assert expect <= reals
    assert any(abs(abs(z.imag) - 10.1945) < 1e-4 for z in eigs)


def test_distinct_eigs_negative_and_trivial():
    assert not check_distinct_eigs(np.eye(2))[0]
    assert check_distinct_eigs(np.diag([1.0, 2.0, 3.0]))[0]


def test_independence_scalar_matrix_collapses():
    res = LinearReservoir(np.eye(2), np.array([0.3, -0.8]))
    report = check_independence(res, [0.0, 1.0])
    assert report.rank == 1
    assert not report.verdict


def test_independence_needs_enough_dimensions():
    res = generate_reservoir(RandomReservoirSpec(2, seed=3))
    report = check_independence(res, np.linalg.eigvals(J_FIXED))
    assert report.rank <= 2
    assert not report.verdict


def test_independence_generic_draw_full_rank():
    res = generate_reservoir(RandomReservoirSpec(7, seed=0))
    report = check_independence(res, np.linalg.eigvals(J_FIXED))
    assert report.rank == 3
    assert report.verdict
    assert report.smallest_singular_value > 0


def test_independence_spectral_collision():
    res = LinearReservoir(np.diag([1.0, 2.0]), np.array([1.0, 1.0]))
    with pytest.raises(SpectralCollisionError):
        check_independence(res, [-1.0, 0.5])


def test_independence_conjugate_columns():
    res = generate_reservoir(RandomReservoirSpec(5, seed=11))
    lam = 0.3 + 2.0j
    report = check_independence(res, [lam, np.conj(lam), -0.7])
    assert np.abs(report.columns[:, 0] - np.conj(report.columns[:, 1])).max() < 1e-10


def test_independence_scale_equivariance():
    res = generate_reservoir(RandomReservoirSpec(6, seed=5))
    eigs = np.linalg.eigvals(J_FIXED)
    base = check_independence(res, eigs)
    for s in (3.0, -0.25):
        scaled = LinearReservoir(res.A, s * res.C)
        rep = check_independence(scaled, eigs)
        assert rep.rank == base.rank and rep.verdict == base.verdict
        assert np.allclose(rep.singular_values,
                           abs(s) * base.singular_values, rtol=1e-10)


def test_independence_solve_accuracy():
    res = generate_reservoir(RandomReservoirSpec(7, seed=2))
    eigs = np.linalg.eigvals(J_FIXED)
    report = check_independence(res, eigs)
    c = res.C[:, 0]
    for j, lam in enumerate(report.eigenvalues):
        v = report.columns[:, j]
        resid = np.linalg.norm((res.A + lam * np.eye(7)) @ v - c)
        assert resid <= 1e-10 * (np.linalg.norm(res.A) + abs(lam)) * np.linalg.norm(v)


def test_report_json_deterministic():
    res = generate_reservoir(RandomReservoirSpec(7, seed=9))
    eigs = np.linalg.eigvals(J_FIXED)
    a = report_to_json(check_independence(res, eigs, seed=9))
    b = report_to_json(check_independence(res, eigs, seed=9))
    assert a == b
    assert '"rank": 3' in a


def test_monte_carlo_generic_and_degenerate():
    spec = RandomReservoirSpec(7, seed=0)
    mc = monte_carlo_embedding_rate(spec, J_FIXED, trials=50)
    assert mc.fraction == 1.0
    assert mc.min_singular_value > 0

    low = monte_carlo_embedding_rate(RandomReservoirSpec(2, seed=0),
                                     J_FIXED, trials=20)
    assert low.fraction == 0.0

    repeated = monte_carlo_embedding_rate(spec, np.diag([1.0, 1.0, 2.0]),
                                          trials=20)
    assert repeated.fraction == 0.0


def test_sweep_csv_schema(tmp_path):
    mc = monte_carlo_embedding_rate(RandomReservoirSpec(4, seed=0),
                                    J_FIXED, trials=5)
    path = tmp_path / "sweep.csv"
    sweep_to_csv(path, mc)
    header, data = read_csv(path)
    assert header == ["seed", "rank", "sigma_min_col", "verdict"]
    assert data.shape == (5, 4)
    assert set(data[:, 3]) <= {0.0, 1.0}
