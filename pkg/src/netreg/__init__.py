"""Bayesian regression of scalar responses on network-valued predictors.

Fits y_i = mu + <A_i, B>_F + eps_i by Gibbs sampling under a network
shrinkage prior that selects influential nodes, adapts each edge
coefficient's scale, and infers the effective dimensionality of the
latent node-factor space.
"""

from .analysis import (
    PosteriorSummary,
    PredictionResult,
    mse_against_truth,
    predict,
    summarize,
)
from .data import (
    Dataset,
    DesignMatrix,
    NetworkObservation,
    StandardizationStats,
    build_design,
    frobenius_inner,
    load_dataset,
    matrix_from_upper,
    standardize,
    vectorize_upper,
)
from .diagnostics import autocorrelation, ess
from .errors import (
    ChainError,
    DataValidationError,
    InvalidParameterError,
    NumericalError,
)
from .gibbs import (
    ChainConfig,
    ChainSamples,
    load_chain,
    merge_chains,
    run_chain,
    run_chains,
    save_chain,
    sweep,
)
from .gir import GirConfig, GirReport, run_gir
from .model import (
    DerivedQuantities,
    Hyperparameters,
    LatentState,
    MuTau2Prior,
    compute_w,
    init_state,
    log_joint,
)
from .rng import RngStream, generator
from .simulate import (
    GroundTruth,
    SimConfig,
    SimulatedStudy,
    gen_predictors,
    gen_response,
    gen_truth,
    read_truth_csv,
    regression_means,
    simulate_study,
    write_truth_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ChainConfig",
    "ChainError",
    "ChainSamples",
    "Dataset",
    "DataValidationError",
    "DerivedQuantities",
    "DesignMatrix",
    "GirConfig",
    "GirReport",
    "GroundTruth",
    "Hyperparameters",
    "InvalidParameterError",
    "LatentState",
    "MuTau2Prior",
    "NetworkObservation",
    "NumericalError",
    "PosteriorSummary",
    "PredictionResult",
    "RngStream",
    "SimConfig",
    "SimulatedStudy",
    "StandardizationStats",
    "autocorrelation",
    "build_design",
    "compute_w",
    "ess",
    "frobenius_inner",
    "gen_predictors",
    "gen_response",
    "gen_truth",
    "generator",
    "init_state",
    "load_chain",
    "load_dataset",
    "log_joint",
    "matrix_from_upper",
    "merge_chains",
    "mse_against_truth",
    "predict",
    "read_truth_csv",
    "regression_means",
    "run_chain",
    "run_chains",
    "run_gir",
    "save_chain",
    "simulate_study",
    "standardize",
    "summarize",
    "sweep",
    "vectorize_upper",
    "write_truth_csv",
]
