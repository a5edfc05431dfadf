import numpy as np

from resvsync.io import read_csv, sha256_file, write_csv


def test_csv_roundtrip_lossless(tmp_path, rng):
    data = np.concatenate([
        rng.normal(size=20) * 1e-12,
        rng.normal(size=20) * 1e9,
        np.array([0.0, -0.0, 1.0 / 3.0, np.pi]),
    ]).reshape(-1, 4)
    path = tmp_path / "vals.csv"
    write_csv(path, ["a", "b", "c", "d"], data)
    header, back = read_csv(path)
    assert header == ["a", "b", "c", "d"]
    assert np.array_equal(back, data)  # 17 significant digits round-trip


def test_csv_rewrite_is_byte_identical(tmp_path, rng):
    data = rng.normal(size=(10, 3))
    p1 = tmp_path / "one.csv"
    p2 = tmp_path / "two.csv"
    write_csv(p1, ["x", "y", "z"], data)
    header, back = read_csv(p1)
    write_csv(p2, header, back)
    assert p1.read_bytes() == p2.read_bytes()


def test_csv_int_columns(tmp_path):
    path = tmp_path / "ints.csv"
    write_csv(path, ["k", "v"], [[3, 0.5], [4, 1.5]], int_cols=(0,))
    text = path.read_text()
    assert text.splitlines()[1].startswith("3,")
    header, rows = read_csv(path)
    assert rows[0][0] == 3.0


def test_sha256_stability(tmp_path):
    path = tmp_path / "blob.bin"
    path.write_bytes(b"reservoir")
    first = sha256_file(path)
    assert first == sha256_file(path)
    path.write_bytes(b"reservoir!")
    assert sha256_file(path) != first


def test_trajectory_csv(tmp_path, cfg, circle_system):
    from resvsync.dynamics import integrate

    traj = integrate(circle_system, np.array([0.0, 1.0]), 0.0, 1.0, cfg)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    header, data = read_csv(path)
    assert header == ["t", "x0", "x1"]
    assert np.array_equal(data[:, 0], traj.times)
    assert np.array_equal(data[:, 1:], traj.states)


def test_sde_path_csv(tmp_path):
    from resvsync.stochastic import SDEPath

    path_obj = SDEPath(np.arange(4) * 0.5, np.arange(8.0).reshape(4, 2), 0.5)
    path = tmp_path / "path.csv"
    path_obj.to_csv(path)
    header, data = read_csv(path)
    assert header == ["t", "x0", "x1"]
    assert np.array_equal(data[:, 1:], path_obj.states)


def test_parallel_map_env(monkeypatch):
    from resvsync.experiments import parallel_map

    monkeypatch.setenv("RESV_SYNC_THREADS", "4")
    out = parallel_map(lambda x: x * x, range(20))
    assert out == [x * x for x in range(20)]
    monkeypatch.setenv("RESV_SYNC_THREADS", "1")
    assert parallel_map(lambda x: -x, [3, 1]) == [-3, -1]
