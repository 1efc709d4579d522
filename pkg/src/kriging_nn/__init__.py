"""Simple Kriging, random single-layer network priors, and the kernels linking them."""

from .depth import (
    DepthMethod,
    DepthVector,
    RankTestResult,
    band_depth,
    band_depths,
    modified_band_depth,
    modified_band_depths,
    rank_test,
)
from .ensemble import PathEnsemble, Provenance, linear_grid
from .errors import NumericalError, ValidationError
from .gp import GPModel, MeanFunction, Observations, Prediction, predict, sample_prior
from .kernels import (
    Family,
    GramMatrix,
    JitterPolicy,
    Kernel,
    PDAuditReport,
    audit_positive_definite,
    cross_covariance,
    eval_kernel,
    gram,
    variogram,
)
from .mlp import (
    KernelEstimate,
    MLPPriorConfig,
    RealizedNetwork,
    TransferFunction,
    TransferKind,
    empirical_covariance,
    eval_network,
    limit_kernel,
    mc_kernel,
    sample_network,
    sample_paths,
)

__all__ = [
    "DepthMethod", "DepthVector", "RankTestResult", "band_depth", "band_depths",
    "modified_band_depth", "modified_band_depths", "rank_test",
    "PathEnsemble", "Provenance", "linear_grid",
    "NumericalError", "ValidationError",
    "GPModel", "MeanFunction", "Observations", "Prediction", "predict", "sample_prior",
    "Family", "GramMatrix", "JitterPolicy", "Kernel", "PDAuditReport",
    "audit_positive_definite", "cross_covariance", "eval_kernel", "gram", "variogram",
    "KernelEstimate", "MLPPriorConfig", "RealizedNetwork", "TransferFunction", "TransferKind",
    "empirical_covariance", "eval_network", "limit_kernel", "mc_kernel", "sample_network",
    "sample_paths",
]
