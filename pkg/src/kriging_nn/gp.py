"""Simple Kriging / Gaussian-process regression with a known mean.

The Simple Kriging predictor and the posterior mean of GP regression are
the same quantity::

    mean(x*) = m(x*) + k*^T (K + s2 I)^-1 (y - m)
    var(x*)  = k(x*, x*) - k*^T (K + s2 I)^-1 k*

Both are computed from one Cholesky factor of ``K + s2 I``; no inverse is
ever formed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _rng
from .ensemble import PathEnsemble, Provenance
from .errors import ValidationError
from .kernels import (
    DEFAULT_JITTER,
    Family,
    JitterPolicy,
    Kernel,
    as_points,
    cholesky_with_jitter,
    gram,
    kernel_matrix,
)

PATH_BLOCK = 256


@dataclass(frozen=True)
class MeanFunction:
    """Known constant mean; ``MeanFunction()`` is the zero mean."""

    value: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValidationError("mean value must be finite")

    @classmethod
    def zero(cls) -> "MeanFunction":
        return cls(0.0)

    @classmethod
    def constant(cls, value: float) -> "MeanFunction":
        return cls(float(value))

    @property
    def kind(self) -> str:
        return "zero" if self.value == 0.0 else "constant"

    def __call__(self, points) -> np.ndarray:
        return np.full(np.atleast_2d(points).shape[0], self.value)


@dataclass(frozen=True)
class GPModel:
    mean: MeanFunction
    kernel: Kernel
    noise_variance: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.noise_variance) and self.noise_variance >= 0):
            raise ValidationError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if self.kernel.family is Family.SIGMOID_TANH:
            raise ValidationError("the sigmoid kernel is not a valid covariance")


@dataclass(frozen=True, eq=False)
class Observations:
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_1d(np.asarray(self.values, dtype=float))
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        pts = as_points(pts)
        if vals.ndim != 1 or len(vals) != pts.shape[0]:
            raise ValidationError(
                f"{pts.shape[0]} points but {vals.size} values"
            )
        if len(vals) < 1:
            raise ValidationError("need at least one observation")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("observed values must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Prediction:
    target: np.ndarray
    mean: float
    variance: float
    clamped: bool = False


def predict(
    model: GPModel,
    obs: Observations,
    targets,
    jitter_policy: JitterPolicy = DEFAULT_JITTER,
) -> list[Prediction]:
    """Posterior mean and variance of ``Z(x*)`` given noisy observations.

    Round-off can push a variance slightly below zero; it is clamped to
    zero.  If it falls below ``-1e-8 * k(x*, x*)`` the prediction is marked
    ``clamped`` and a warning is issued.

    Raises
    ------
    NumericalError
        ``K + s2 I`` cannot be factored within the jitter policy.
    """
    kern = model.kernel
    P = as_points(obs.points, kern.input_dim)
    T = as_points(targets, kern.input_dim)

    A = kernel_matrix(kern, P)
    A[np.diag_indices_from(A)] += model.noise_variance
    L, _ = cholesky_with_jitter(A, jitter_policy)

    resid = obs.values - model.mean(P)
    alpha = scipy.linalg.cho_solve((L, True), resid, check_finite=False)
    Ks = kern.matrix(P, T)
    V = scipy.linalg.solve_triangular(L, Ks, lower=True, check_finite=False)

    kss = np.array([kern.matrix(t[None, :])[0, 0] for t in T])
    means = model.mean(T) + Ks.T @ alpha
    var = kss - np.sum(V * V, axis=0)

    out = []
    for t, mu, v, k0 in zip(T, means, var, kss):
        flagged = bool(v < -1e-8 * abs(k0))
        if flagged:
            warnings.warn(
                f"posterior variance {v:.3g} at {t.tolist()} is well below zero; clamped",
                RuntimeWarning,
                stacklevel=2,
            )
        out.append(Prediction(target=t.copy(), mean=float(mu), variance=max(float(v), 0.0), clamped=flagged))
    return out


def sample_prior(
    model: GPModel,
    grid,
    n_paths: int,
    seed: int,
    workers: int = 1,
    jitter_policy: JitterPolicy = DEFAULT_JITTER,
) -> PathEnsemble:
    """Draw prior paths of ``Z`` (observation noise is not added).

    Path ``i`` is ``m + L z_i`` with ``z_i`` from substream ``(seed, i)``,
    so a path does not depend on how many others are drawn or on
    ``workers``.
    """
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1")
    G = gram(model.kernel, grid, jitter_policy)
    L = G.cholesky
    mu = model.mean(G.points)
    g = G.n

    def run(block):
        lo, hi = block
        Z = np.stack([_rng.substream(seed, _rng.GP_PATHS, i).standard_normal(g) for i in range(lo, hi)])
        return mu + Z @ L.T

    parts = _rng.parallel_map(run, _rng.blocks(n_paths, PATH_BLOCK), workers)
    return PathEnsemble(grid=G.points, paths=np.vstack(parts), provenance=Provenance.GP, seed=seed)
