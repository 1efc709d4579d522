"""Seeded GP-versus-network comparison runs.

Each repetition draws its own pair of ensemble seeds from the master seed,
so a repetition can be rerun in isolation.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ._rng import EXPERIMENT
from .depth import DepthMethod, RankTestResult, rank_test
from .ensemble import linear_grid
from .errors import ValidationError
from .gp import GPModel, MeanFunction, sample_prior
from .kernels import Kernel
from .mlp import MLPPriorConfig, TransferFunction, sample_paths

CASES = ("linear", "se")


def default_grid() -> np.ndarray:
    return linear_grid(-3.0, 3.0, 100)


def rep_seeds(seed: int, rep: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(EXPERIMENT, int(rep)))
    a, b = ss.generate_state(2, dtype=np.uint32)
    return int(a), int(b)


def comparison_models(case: str, hidden: int, sigma: float = 1.0, output_var: float = 1.0):
    """GP and network priors that share a covariance in the wide limit."""
    if case == "se":
        kernel = Kernel.squared_exponential(sigma, 1)
        transfer = TransferFunction.cosine(sigma, 1)
    elif case == "linear":
        kernel = Kernel.linear(np.eye(1))
        transfer = TransferFunction.linear(np.eye(1))
    else:
        raise ValidationError(f"case must be one of {CASES}, got {case!r}")
    gp = GPModel(MeanFunction.zero(), kernel, 0.0)
    if output_var != 1.0:
        raise ValidationError("only unit output variance matches the unit-variance GP kernel")
    net = MLPPriorConfig(transfer, hidden, output_var, bias_included=False)
    return gp, net


def gp_vs_mlp(
    case: str,
    seed: int,
    rep: int = 0,
    n_paths: int = 50,
    hidden: int = 200,
    grid: Optional[np.ndarray] = None,
    method=DepthMethod.BAND,
    workers: int = 1,
) -> RankTestResult:
    grid = default_grid() if grid is None else grid
    gp, net = comparison_models(case, hidden)
    s_gp, s_net = rep_seeds(seed, rep)
    a = sample_prior(gp, grid, n_paths, s_gp, workers)
    b = sample_paths(net, grid, n_paths, s_net, workers)
    return rank_test(a, b, method, workers)


def gp_vs_gp(
    kernel_a: Kernel,
    kernel_b: Kernel,
    seed: int,
    rep: int = 0,
    n_paths: int = 50,
    grid: Optional[np.ndarray] = None,
    method=DepthMethod.BAND,
    workers: int = 1,
) -> RankTestResult:
    """Rank test between two GP ensembles; equal kernels give a null run."""
    grid = default_grid() if grid is None else grid
    s_a, s_b = rep_seeds(seed, rep)
    a = sample_prior(GPModel(MeanFunction.zero(), kernel_a), grid, n_paths, s_a, workers)
    b = sample_prior(GPModel(MeanFunction.zero(), kernel_b), grid, n_paths, s_b, workers)
    return rank_test(a, b, method, workers)


def rejection_rate(results, alpha: float = 0.05) -> float:
    results = list(results)
    return sum(r.p_value < alpha for r in results) / len(results)
