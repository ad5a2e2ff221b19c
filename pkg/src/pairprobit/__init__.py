"""Pairwise likelihood inference for the multivariate ordered probit model.

Point estimation maximizes the pairwise (composite) log-likelihood with
its closed-form score vector; interval estimation uses the empirical
Godambe information matrix built from per-observation and per-pair score
contributions.
"""

__version__ = "0.1.0"

from .counts import OrdinalDataset, PairCounts, compute_counts
from .fit import EstimationError, FitConfig, FitResult, fit_dataset, initialize, maximize
from .godambe import (GodambeMatrices, InferenceError, WaldInterval,
                      godambe_G, godambe_matrices, sensitivity_H,
                      variability_J, wald_intervals)
from .model import (CorrelationParams, ModelDims, ThresholdSet,
                    chain_rule_score, from_psi, pack_theta, pair_index,
                    parameter_names, psi_jacobian, to_psi, unpack_theta)
from .pairwise import (CellProbCache, EvalDiagnostics, cell_prob,
                       loglik_and_score, pairwise_loglik, pairwise_score,
                       per_observation_score, per_pair_score)
from .simulate import (StudyConfig, StudyResult, random_sparse_correlation,
                       run_study, sample_dataset)

__all__ = [
    "CellProbCache", "CorrelationParams", "EstimationError",
    "EvalDiagnostics", "FitConfig", "FitResult", "GodambeMatrices",
    "InferenceError", "ModelDims", "OrdinalDataset", "PairCounts",
    "StudyConfig", "StudyResult", "ThresholdSet", "WaldInterval",
    "cell_prob", "chain_rule_score", "compute_counts", "fit_dataset",
    "from_psi", "godambe_G", "godambe_matrices", "initialize",
    "loglik_and_score", "maximize", "pack_theta", "pair_index",
    "pairwise_loglik", "pairwise_score", "parameter_names",
    "per_observation_score", "per_pair_score", "psi_jacobian",
    "random_sparse_correlation", "run_study", "sample_dataset",
    "sensitivity_H", "to_psi", "unpack_theta", "variability_J",
    "wald_intervals", "__version__",
]
