"""Generalised synchronisation toolkit for continuous-time reservoirs.

Simulates driven reservoir systems, estimates their synchronisation
maps (quadrature, washout, and fixed-point closed forms), certifies
contraction and fixed-point embedding conditions, trains random-feature
readouts for closed-loop spectrum recovery, and quantifies the
Ornstein-Uhlenbeck error process induced by observation noise.
"""

__version__ = "0.1.0"

from .dynamics import (
    DivergenceError,
    IntegratorConfig,
    SourceSystem,
    Trajectory,
    circle,
    flow,
    integrate,
    jacobian,
    lorenz63,
    tangent_flow,
)
from .embedding import (
    RandomReservoirSpec,
    check_distinct_eigs,
    check_independence,
    generate_reservoir,
    monte_carlo_embedding_rate,
)
from .gs import GSSample, gs_fixed_point, gs_integral, gs_washout, pde_residual
from .readout import (
    ClosedLoopSystem,
    FeatureBank,
    closed_loop_jacobian,
    eig_compare,
    fit_readout,
    sample_features,
)
from .reservoir import (
    DrivenSignal,
    LeakyESN,
    LinearReservoir,
    SinusoidReservoir,
    contraction_certificate,
    drive,
    stability_probe,
)
from .stochastic import (
    SDEPath,
    euler_maruyama,
    ou_simulate,
    stationary_covariance_check,
    stationary_covariance_ensemble,
)
