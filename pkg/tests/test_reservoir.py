import math

import numpy as np
import pytest

from resvsync.dynamics import SourceSystem
from resvsync.reservoir import (
    DrivenSignal,
    LeakyESN,
    LinearReservoir,
    SinusoidReservoir,
    contraction_certificate,
    drive,
    drive_many,
    jacobian_x,
    model_from_json,
    model_to_json,
    stability_probe,
)


def constant_signal(value=1.0):
    source = SourceSystem(1, lambda y: np.zeros(1), name="still")
    return DrivenSignal(source, lambda m: value, np.zeros(1))


def circle_signal(circle_system, anchor=(0.0, 1.0)):
    return DrivenSignal(circle_system, lambda m: m[0], np.asarray(anchor))


def random_spd(rng, n, lo=0.5, hi=4.0):
    evals = rng.uniform(lo, hi, n)
    z = rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    return (q * evals) @ q.T


def test_linear_reservoir_validation():
    with pytest.raises(ValueError):
        LinearReservoir(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))
    with pytest.raises(ValueError):
        LinearReservoir(np.array([[-1.0]]), np.ones(1))
    res = LinearReservoir(np.diag([2.0, 4.0]), np.ones(2))
    assert res.sigma_min == 2.0 and res.sigma_max == 4.0
    assert res.C.shape == (2, 1)


def test_scalar_drive_closed_form(cfg):
    res = LinearReservoir(np.array([[1.0]]), np.array([[1.0]]))
    traj = drive(res, constant_signal(1.0), np.zeros(1), 0.0, 10.0, cfg)
    # x' = -x + 1 from 0 has solution 1 - e^{-t}
    assert abs(traj.final_state[0] - (1.0 - math.exp(-10.0))) < 1e-8


def test_drive_zero_span_single_point(cfg):
    res = LinearReservoir(np.array([[1.0]]), np.array([[1.0]]))
    traj = drive(res, constant_signal(), np.array([0.7]), 2.0, 2.0, cfg)
    assert len(traj.times) == 1
    assert traj.times[0] == 2.0 and traj.states[0, 0] == 0.7


def test_sinusoid_stays_in_unit_box(circle_system, cfg):
    model = SinusoidReservoir(1.0)
    traj = drive(model, circle_signal(circle_system), np.array([0.5, 0.5]),
                 0.0, 100.0, cfg)
    post = traj.states[traj.times >= 35.0]
    assert (post >= 0.0).all() and (post <= 1.0).all()


def test_jacobian_linear_is_minus_a():
    res = LinearReservoir(np.diag([2.0, 3.0]), np.ones(2))
    J = jacobian_x(res, np.array([5.0, -1.0]), 0.3)
    assert np.array_equal(J, -res.A)


def test_jacobian_sinusoid_quarter_point():
    model = SinusoidReservoir(1.0)
    J = jacobian_x(model, np.array([0.25, 0.25]), 0.0)
    assert np.abs(J).max() < 1e-12


def test_jacobian_leaky_esn_finite_difference(rng):
    n, d = 4, 2
    model = LeakyESN(0.7, rng.normal(size=(n, n)) * 0.3,
                     rng.normal(size=(n, d)) * 0.3, rng.normal(size=n) * 0.1)
    for _ in range(50):
        x = rng.normal(size=n)
        z = rng.normal(size=d)
        J = jacobian_x(model, x, z)
        h = 1e-5
        Jfd = np.empty_like(J)
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            Jfd[:, j] = (model.field(x + e, z) - model.field(x - e, z)) / (2 * h)
        assert np.abs(J - Jfd).max() <= 1e-5 * (1.0 + np.abs(J).max())


def test_contraction_linear_delta_is_sigma_min(rng):
    A = random_spd(rng, 5)
    res = LinearReservoir(A, np.ones(5))
    cert = contraction_certificate(res, [np.zeros(5)], [0.0])
    assert cert.verdict
    assert abs(cert.delta - res.sigma_min) < 1e-10


def test_contraction_sinusoid_inner_box():
    model = SinusoidReservoir(1.0)
    pts = [np.array([x, y]) for x in np.linspace(0.3, 0.7, 9)
           for y in np.linspace(0.3, 0.7, 9)]
    cert = contraction_certificate(model, pts, [0.0, 1.0])
    assert cert.verdict
    # cos(2 pi x) < 0 throughout (0.3, 0.7), worst case at the edges
    expected = 2.0 * math.pi * math.cos(2.0 * math.pi * 0.3)
    assert abs(cert.max_quadratic_form - expected) < 1e-12


def test_contraction_sinusoid_fails_at_origin():
    model = SinusoidReservoir(1.0)
    cert = contraction_certificate(model, [np.zeros(2)], [0.0])
    assert not cert.verdict
    assert abs(cert.max_quadratic_form - 2.0 * math.pi) < 1e-12


def test_certificate_soundness_on_samples(rng):
    model = LeakyESN(0.5, rng.normal(size=(3, 3)) * 0.4,
                     rng.normal(size=(3, 1)) * 0.4, rng.normal(size=3) * 0.2)
    states = [rng.normal(size=3) for _ in range(5)]
    inputs = [rng.normal(size=1) for _ in range(3)]
    cert = contraction_certificate(model, states, inputs)
    for w in states:
        for z in inputs:
            D = jacobian_x(model, w, z)
            for _ in range(100):
                v = rng.normal(size=3)
                ratio = v @ D @ v / (v @ v)
                assert ratio <= cert.max_quadratic_form + 1e-12


def test_stability_probe_linear_rate(cfg, rng):
    A = random_spd(rng, 4, lo=0.8, hi=2.5)
    res = LinearReservoir(A, np.ones(4))
    probe = stability_probe(res, constant_signal(), np.zeros(4),
                            rng.normal(size=4), 12.0, cfg)
    assert 0.95 * res.sigma_min <= probe.rate <= 1.05 * res.sigma_max


def test_stability_probe_identical_starts(cfg):
    res = LinearReservoir(np.array([[1.0]]), np.array([[1.0]]))
    x0 = np.array([0.4])
    probe = stability_probe(res, constant_signal(), x0, x0.copy(), 5.0, cfg)
    assert np.all(probe.distances == 0.0)
    assert probe.rate == np.inf


def test_stability_probe_sinusoid_synchronises(circle_system, cfg):
    model = SinusoidReservoir(1.0)
    probe = stability_probe(model, circle_signal(circle_system),
                            np.array([0.45, 0.55]), np.array([0.55, 0.45]),
                            36.0, cfg)
    at35 = probe.distances[np.searchsorted(probe.times, 35.0)]
    assert at35 < 1e-3


def test_linear_superposition(circle_system, cfg):
    res = LinearReservoir(np.diag([1.0, 2.0]), np.ones(2))
    x0 = np.zeros(2)
    sig_u = circle_signal(circle_system)
    sig_v = DrivenSignal(circle_system, lambda m: m[1], np.array([0.0, 1.0]))
    sig_uv = DrivenSignal(circle_system, lambda m: m[0] + m[1], np.array([0.0, 1.0]))
    t_grid = np.linspace(0.0, 8.0, 30)
    a = drive(res, sig_u, x0, 0.0, 8.0, cfg).at(t_grid)
    b = drive(res, sig_v, x0, 0.0, 8.0, cfg).at(t_grid)
    ab = drive(res, sig_uv, x0, 0.0, 8.0, cfg).at(t_grid)
    assert np.abs(ab - (a + b)).max() < 1e-7


def test_linear_decay_bound(cfg, rng):
    A = random_spd(rng, 3, lo=0.8, hi=2.0)
    res = LinearReservoir(A, np.ones(3))
    x0 = rng.normal(size=3)
    y0 = rng.normal(size=3)
    sig = constant_signal(0.5)
    _, (tx, ty) = drive_many(res, sig, [x0, y0], 0.0, 10.0, cfg)
    d = np.linalg.norm(tx.states - ty.states, axis=1)
    bound = (np.linalg.norm(x0 - y0)
             * np.exp(-res.sigma_min * tx.times) * (1.0 + 10.0 * cfg.rtol))
    assert (d <= bound + 1e-14).all()


def test_multi_gs_separation(circle_system, cfg):
    model = SinusoidReservoir(1.0)
    seeds = [np.array(p) for p in
             [(0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)]]
    _, trajs = drive_many(model, circle_signal(circle_system), seeds,
                          0.0, 100.0, cfg)
    ts = np.arange(35.0, 100.0, 0.05)
    sampled = [tr.at(ts).T for tr in trajs]
    for i in range(4):
        for j in range(i + 1, 4):
            gap = np.linalg.norm(sampled[i] - sampled[j], axis=1).min()
            assert gap > 0.1


def test_model_json_roundtrip(rng):
    models = [
        LinearReservoir(random_spd(rng, 3), rng.normal(size=(3, 2))),
        LeakyESN(0.9, rng.normal(size=(2, 2)), rng.normal(size=(2, 1)),
                 rng.normal(size=2)),
        SinusoidReservoir(0.7),
    ]
    for model in models:
        clone = model_from_json(model_to_json(model))
        assert type(clone) is type(model)
        assert model_to_json(clone) == model_to_json(model)


def test_drive_dimension_checks(circle_system, cfg):
    res = LinearReservoir(np.array([[1.0]]), np.array([[1.0]]))
    with pytest.raises(ValueError):
        drive(res, circle_signal(circle_system), np.zeros(2), 0.0, 1.0, cfg)
    with pytest.raises(ValueError):
        drive(res, circle_signal(circle_system), np.zeros(1), 1.0, 0.0, cfg)


def test_signal_time_offset(circle_system, cfg):
    # offsetting the anchor by pi/2 equals anchoring at the flowed point
    res = LinearReservoir(np.array([[1.0]]), np.array([[1.0]]))
    shifted = DrivenSignal(circle_system, lambda m: m[0],
                           np.array([0.0, 1.0]), t_offset=math.pi / 2)
    direct = DrivenSignal(circle_system, lambda m: m[0],
                          np.array([-1.0, 0.0]))
    a = drive(res, shifted, np.zeros(1), 0.0, 4.0, cfg)
    b = drive(res, direct, np.zeros(1), 0.0, 4.0, cfg)
    grid = np.linspace(0.0, 4.0, 17)
    assert np.abs(a.at(grid) - b.at(grid)).max() < 1e-7
