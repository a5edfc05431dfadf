import numpy as np
import pytest

from resvsync.dynamics import IntegratorConfig, circle, lorenz63

# the reconstruction experiment settings shared by the pipeline tests
# and the acceptance sweep
LORENZ_BASE_CONFIG = {
    "seed": 0,
    "n_reservoir": 7,
    "n_features": 300,
    "scale": 30.0,
    "t_final": 200.0,
    "sample_dt": 0.02,
    "train_start": 0.0,
    "damp": 0.0,
    "source_offset": 1.0e-3,
    "feature_seed_offset": 10_000,
    "pca_components": 3,
}


@pytest.fixture(scope="session")
def cfg():
    return IntegratorConfig()


@pytest.fixture(scope="session")
def lorenz_sweep():
    """Reconstruction pipeline outputs for seeds 0..9 (built once)."""
    from resvsync.experiments import lorenz_pipeline

    runs = {}
    for seed in range(10):
        config = dict(LORENZ_BASE_CONFIG)
        config["seed"] = seed
        runs[seed] = lorenz_pipeline(config, IntegratorConfig())
    return runs


@pytest.fixture(scope="session")
def tight_cfg():
    return IntegratorConfig(rtol=1e-12, atol=1e-14)


@pytest.fixture(scope="session")
def circle_system():
    return circle()


@pytest.fixture(scope="session")
def lorenz_system():
    return lorenz63()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
