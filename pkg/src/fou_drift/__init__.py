"""Simulation and drift estimation for the fractional Ornstein-Uhlenbeck process
with Hurst index below 1/2, observed on a high-frequency grid."""

__version__ = "0.1.0"

from .errors import (
    FactorizationFailure,
    FouError,
    GridTooLarge,
    MemoryBudgetExceeded,
    MissingDriver,
    NonPositiveDefiniteEmbedding,
    NumericalError,
    OverflowDetected,
    ScanTooLarge,
    ZeroDenominator,
)
from .paths import SampledPath, UniformGrid, read_path_csv, write_path_csv
from .fbm import (
    covariance_r,
    cumulate,
    fgn_autocovariance,
    sample_fbm_cholesky,
    sample_fgn_circulant,
)
from .fou import FouParams, GridSpec, Scheme, SimulatedPair, simulate_fou, zero_noise_path
from .accumulate import ScaledAccumulator
from .estimators import (
    Estimate,
    decomposition_residual,
    estimate,
    theta_hat,
    theta_hu_song,
    theta_lse,
    theta_terminal,
)
from .theory import CheckReport, noiseless_estimator_oracle
from .harness import ExperimentConfig, ExperimentReport, reproduce_table, run_cell, run_experiment
