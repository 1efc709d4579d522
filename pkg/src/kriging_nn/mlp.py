"""Random single-hidden-layer networks and the kernels they induce.

A network ``y(x) = b0 + sum_j b_j h(x; a_j)`` with i.i.d. hidden weights
``a_j`` and zero-mean output weights of variance ``c / L`` has covariance

    E[Y(x) Y(x')] = (c/L) [bias] + c * E[h(x; a) h(x'; a)]

whatever the width ``L``; as ``L`` grows the output becomes Gaussian.  This
module samples such networks and estimates ``E[h h']`` by Monte Carlo.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf

from . import _rng
from .ensemble import PathEnsemble, Provenance
from .errors import ValidationError
from .kernels import Kernel, _check_cov, as_points

PATH_BLOCK = 256
SQRT2 = np.sqrt(2.0)


class TransferKind(str, enum.Enum):
    LINEAR = "linear"
    ERF = "erf"
    COSINE = "cos"
    BUMP = "bump"
    HEAVISIDE = "heaviside"
    RELU = "relu"


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """Hidden-unit nonlinearity and the law of its weights.

    =========  ==========================  =====================
    kind       h(x; a)                     a ~
    =========  ==========================  =====================
    linear     a.x                         N(0, weight_cov)
    erf        erf(a.x)                    N(0, weight_cov)
    cos        sqrt(2) cos(a.x + phi)      N(0, I / sigma^2)
    bump       exp(-|x - a|^2 / 2 sg^2)    N(0, sigma_a^2 I)
    heaviside  1[a.x >= 0]                 N(0, I)
    relu       max(0, a.x)                 N(0, I)
    =========  ==========================  =====================

    For ``cos`` the phase ``phi`` is uniform on ``[0, 2 pi)`` and drawn
    with each unit.
    """

    kind: TransferKind
    input_dim: int
    weight_cov: Optional[np.ndarray] = None
    sigma: float = 1.0
    sigma_g: float = 1.0
    sigma_a: float = 1.0

    def __post_init__(self):
        kind = TransferKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.input_dim) != self.input_dim or self.input_dim < 1:
            raise ValidationError("input_dim must be a positive integer")
        d = int(self.input_dim)
        object.__setattr__(self, "input_dim", d)
        for name in ("sigma", "sigma_g", "sigma_a"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {v}")
        if kind in (TransferKind.LINEAR, TransferKind.ERF):
            cov = np.eye(d) if self.weight_cov is None else self.weight_cov
        elif kind is TransferKind.COSINE:
            cov = np.eye(d) / self.sigma**2
        elif kind is TransferKind.BUMP:
            cov = np.eye(d) * self.sigma_a**2
        else:
            cov = np.eye(d)
        cov = _check_cov(cov, d)
        object.__setattr__(self, "weight_cov", cov)
        lam, vec = np.linalg.eigh(cov)
        object.__setattr__(self, "_factor", vec * np.sqrt(np.clip(lam, 0.0, None)))

    @classmethod
    def linear(cls, weight_cov=None, input_dim: int = 1) -> "TransferFunction":
        if weight_cov is not None:
            input_dim = np.array(weight_cov, ndmin=2).shape[0]
        return cls(TransferKind.LINEAR, input_dim, weight_cov=weight_cov)

    @classmethod
    def erf(cls, weight_cov=None, input_dim: int = 1) -> "TransferFunction":
        if weight_cov is not None:
            input_dim = np.array(weight_cov, ndmin=2).shape[0]
        return cls(TransferKind.ERF, input_dim, weight_cov=weight_cov)

    @classmethod
    def cosine(cls, sigma: float = 1.0, input_dim: int = 1) -> "TransferFunction":
        return cls(TransferKind.COSINE, input_dim, sigma=sigma)

    @classmethod
    def bump(cls, sigma_g: float = 1.0, sigma_a: float = 1.0, input_dim: int = 1) -> "TransferFunction":
        return cls(TransferKind.BUMP, input_dim, sigma_g=sigma_g, sigma_a=sigma_a)

    @classmethod
    def heaviside(cls, input_dim: int = 1) -> "TransferFunction":
        return cls(TransferKind.HEAVISIDE, input_dim)

    @classmethod
    def relu(cls, input_dim: int = 1) -> "TransferFunction":
        return cls(TransferKind.RELU, input_dim)

    @property
    def bounded(self) -> bool:
        return self.kind not in (TransferKind.LINEAR, TransferKind.RELU)

    def sample_weights(self, rng: np.random.Generator, n: int):
        """Draw ``n`` hidden-weight vectors and, for ``cos``, their phases."""
        W = rng.standard_normal((n, self.input_dim)) @ self._factor.T
        phases = rng.uniform(0.0, 2.0 * np.pi, size=n) if self.kind is TransferKind.COSINE else None
        return W, phases

    def evaluate(self, X, W, phases=None) -> np.ndarray:
        """``H[i, j] = h(X[i]; W[j])``."""
        X = as_points(X, self.input_dim)
        W = np.atleast_2d(W)
        k = self.kind
        if k is TransferKind.BUMP:
            diff = X[:, None, :] - W[None, :, :]
            return np.exp(-np.sum(diff * diff, axis=-1) / (2.0 * self.sigma_g**2))
        pre = X @ W.T
        if k is TransferKind.LINEAR:
            return pre
        if k is TransferKind.ERF:
            return erf(pre)
        if k is TransferKind.COSINE:
            if phases is None:
                raise ValidationError("cos transfer needs phases")
            return SQRT2 * np.cos(pre + phases[None, :])
        if k is TransferKind.HEAVISIDE:
            # step taken as 1 at 0 (closed half-line)
            return (pre >= 0).astype(float)
        return np.maximum(pre, 0.0)


def limit_kernel(transfer: TransferFunction) -> tuple[Kernel, float]:
    """Closed-form kernel ``k`` and ratio ``r`` with ``E[h(x;a) h(x';a)] = r * k(x, x')``.

    ``r`` is 1 except for the arc-cosine pair, whose kernels are defined as
    twice the expectation.
    """
    d = transfer.input_dim
    k = transfer.kind
    if k is TransferKind.LINEAR:
        return Kernel.linear(transfer.weight_cov), 1.0
    if k is TransferKind.ERF:
        return Kernel.neural_net(transfer.weight_cov), 1.0
    if k is TransferKind.COSINE:
        return Kernel.squared_exponential(transfer.sigma, d), 1.0
    if k is TransferKind.BUMP:
        return Kernel.nonstat_se(transfer.sigma_g, transfer.sigma_a, d), 1.0
    if k is TransferKind.HEAVISIDE:
        return Kernel.arc_cosine_i(d), 0.5
    return Kernel.arc_cosine_ii(d), 0.5


@dataclass(frozen=True)
class MLPPriorConfig:
    """Width and output scaling of the random network.

    Output weights have variance ``total_output_variance / hidden_units``,
    so the output variance stays fixed as the width grows.
    """

    transfer: TransferFunction
    hidden_units: int
    total_output_variance: float = 1.0
    bias_included: bool = False

    def __post_init__(self):
        if int(self.hidden_units) != self.hidden_units or self.hidden_units < 1:
            raise ValidationError(f"hidden_units must be an integer >= 1, got {self.hidden_units}")
        c = self.total_output_variance
        if not (np.isfinite(c) and c > 0):
            raise ValidationError(f"total_output_variance must be > 0, got {c}")

    @property
    def output_weight_variance(self) -> float:
        return self.total_output_variance / self.hidden_units

    def covariance(self, X, Y=None) -> np.ndarray:
        """Exact covariance of the network output at any width."""
        kern, ratio = limit_kernel(self.transfer)
        K = self.total_output_variance * ratio * kern.matrix(X, Y)
        if self.bias_included:
            K = K + self.output_weight_variance
        return K


@dataclass(frozen=True, eq=False)
class RealizedNetwork:
    transfer: TransferFunction
    weights: np.ndarray
    output_weights: np.ndarray
    bias: Optional[float] = None
    phases: Optional[np.ndarray] = None

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.atleast_1d(np.asarray(self.output_weights, dtype=float))
        if W.shape != (b.size, self.transfer.input_dim):
            raise ValidationError(f"weights {W.shape} do not match {b.size} output weights")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise ValidationError("network weights must be finite")
        if self.transfer.kind is TransferKind.COSINE:
            if self.phases is None or np.size(self.phases) != b.size:
                raise ValidationError("cos networks need one phase per unit")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "output_weights", b)

    @property
    def hidden_units(self) -> int:
        return self.output_weights.size

    def evaluate(self, X) -> np.ndarray:
        H = self.transfer.evaluate(X, self.weights, self.phases)
        out = H @ self.output_weights
        return out + self.bias if self.bias is not None else out


def sample_network(config: MLPPriorConfig, seed: int, index: int = 0) -> RealizedNetwork:
    """Draw network ``index`` of the stream keyed by ``seed``."""
    rng = _rng.substream(seed, _rng.MLP_NETWORKS, index)
    L = config.hidden_units
    W, phases = config.transfer.sample_weights(rng, L)
    sd = np.sqrt(config.output_weight_variance)
    b = sd * rng.standard_normal(L)
    b0 = float(sd * rng.standard_normal()) if config.bias_included else None
    return RealizedNetwork(config.transfer, W, b, b0, phases)


def eval_network(net: RealizedNetwork, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (net.transfer.input_dim,):
        raise ValidationError(f"dimension mismatch: network takes {net.transfer.input_dim}-vectors")
    return float(net.evaluate(x[None, :])[0])


def sample_paths(
    config: MLPPriorConfig,
    grid,
    n_paths: int,
    seed: int,
    workers: int = 1,
) -> PathEnsemble:
    """Evaluate ``n_paths`` independently drawn networks on ``grid``."""
    if n_paths < 1:
        raise ValidationError("n_paths must be >= 1")
    G = as_points(grid, config.transfer.input_dim)

    def run(block):
        lo, hi = block
        return np.stack([sample_network(config, seed, i).evaluate(G) for i in range(lo, hi)])

    parts = _rng.parallel_map(run, _rng.blocks(n_paths, PATH_BLOCK), workers)
    return PathEnsemble(grid=G, paths=np.vstack(parts), provenance=Provenance.MLP, seed=seed)


@dataclass(frozen=True)
class KernelEstimate:
    value: float
    std_error: float
    n_mc: int

    def csv_row(self) -> str:
        return f"{self.value!r},{self.std_error!r},{self.n_mc}"


def mc_kernel(
    transfer: TransferFunction,
    x,
    x2,
    n_mc: int,
    seed: int,
    workers: int = 1,
) -> KernelEstimate:
    """Monte Carlo estimate of ``E[h(x; a) h(x2; a)]``.

    Draws come in fixed blocks with one substream each; the products are
    concatenated in block order and reduced with numpy's pairwise sum, so
    the estimate does not depend on ``workers``.
    """
    if n_mc < 100:
        raise ValidationError("n_mc must be >= 100")
    P = as_points(np.vstack([np.atleast_1d(x), np.atleast_1d(x2)]).astype(float), transfer.input_dim)

    def run(args):
        b, (lo, hi) = args
        W, phases = transfer.sample_weights(_rng.substream(seed, _rng.MC_KERNEL, b), hi - lo)
        H = transfer.evaluate(P, W, phases)
        return H[0] * H[1]

    parts = _rng.parallel_map(run, list(enumerate(_rng.blocks(n_mc, _rng.MC_BLOCK))), workers)
    prod = np.concatenate(parts)
    return KernelEstimate(
        value=float(np.mean(prod)),
        std_error=float(np.std(prod, ddof=1) / np.sqrt(n_mc)),
        n_mc=int(n_mc),
    )


def empirical_covariance(ensemble: PathEnsemble) -> np.ndarray:
    """Unbiased covariance across paths for every pair of grid points."""
    Y = ensemble.paths if isinstance(ensemble, PathEnsemble) else np.atleast_2d(ensemble)
    if Y.shape[0] < 2:
        raise ValidationError("need at least 2 paths")
    D = Y - Y.mean(axis=0)
    return D.T @ D / (Y.shape[0] - 1)
