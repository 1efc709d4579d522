"""Closed-form covariance kernels induced by random single-layer networks.

Each family corresponds to one transfer function with Gaussian weights (see
:mod:`kriging_nn.mlp`), plus the improper limits reached when the weight
spread grows without bound, plus the tanh "sigmoid kernel", which is kept
only so its failure to be positive semidefinite can be demonstrated.

Kernels evaluate on row-stacked point arrays::

    >>> k = Kernel.squared_exponential(sigma=1.0, input_dim=1)
    >>> k.matrix([[0.0], [1.0]], [[0.0]]).ravel().round(5)
    array([1.     , 0.60653])
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ._rng import PD_AUDIT, substream
from .errors import NumericalError, ValidationError


class Family(str, enum.Enum):
    LINEAR = "linear"
    NEURAL_NET = "neural_net"
    SQUARED_EXPONENTIAL = "se"
    NONSTAT_SE = "nonstat_se"
    ARC_COSINE_I = "arccos1"
    ARC_COSINE_II = "arccos2"
    WHITE_NOISE = "white_noise"
    NORMALIZED_ARCSINE = "arcsine_limit"
    HALF_WIDTH_SE = "halfwidth_se"
    SIGMOID_TANH = "sigmoid"


STATIONARY = frozenset({Family.SQUARED_EXPONENTIAL, Family.WHITE_NOISE, Family.HALF_WIDTH_SE})
# families whose value depends on x / ||x|| and is undefined at the origin
NORMALIZED = frozenset({Family.ARC_COSINE_I, Family.NORMALIZED_ARCSINE})
_USES_WEIGHT_COV = frozenset({Family.LINEAR, Family.NEURAL_NET, Family.NORMALIZED_ARCSINE})


def _check_cov(cov, input_dim: int) -> np.ndarray:
    cov = np.array(cov, dtype=float, ndmin=2)
    if cov.shape != (input_dim, input_dim):
        raise ValidationError(
            f"weight covariance must be {input_dim}x{input_dim}, got {cov.shape}"
        )
    if not np.all(np.isfinite(cov)):
        raise ValidationError("weight covariance has non-finite entries")
    if not np.array_equal(cov, cov.T):
        raise ValidationError("weight covariance must be symmetric")
    lam = np.linalg.eigvalsh(cov)
    if lam[0] < -1e-12 * max(1.0, abs(lam[-1])):
        raise ValidationError(f"weight covariance is not PSD (min eigenvalue {lam[0]:.3g})")
    cov.setflags(write=False)
    return cov


@dataclass(frozen=True, eq=False)
class Kernel:
    """A kernel family together with its parameters.

    Use the named constructors rather than the raw initializer; they fill
    in only the parameters each family reads.

    Attributes
    ----------
    family : Family
    input_dim : int
    weight_cov : ndarray or None
        Weight covariance for the linear, neural-network and arcsine-limit
        families.
    sigma : float
        Length scale of the squared exponential.
    sigma_g, sigma_a : float
        Bump width and weight spread of the non-stationary squared
        exponential; ``sigma_g`` alone for its half-width limit.
    slope, offset : float
        ``tanh(slope * x.x' + offset)`` for the sigmoid kernel.
    """

    family: Family
    input_dim: int
    weight_cov: Optional[np.ndarray] = None
    sigma: float = 1.0
    sigma_g: float = 1.0
    sigma_a: float = 1.0
    slope: float = 1.0
    offset: float = 1.0

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if int(self.input_dim) != self.input_dim or self.input_dim < 1:
            raise ValidationError(f"input_dim must be a positive integer, got {self.input_dim}")
        object.__setattr__(self, "input_dim", int(self.input_dim))
        if family in _USES_WEIGHT_COV:
            cov = np.eye(self.input_dim) if self.weight_cov is None else self.weight_cov
            object.__setattr__(self, "weight_cov", _check_cov(cov, self.input_dim))
        for name in ("sigma", "sigma_g", "sigma_a"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {v}")
        if not (np.isfinite(self.slope) and np.isfinite(self.offset)):
            raise ValidationError("sigmoid slope/offset must be finite")

    # -- constructors ---------------------------------------------------

    @classmethod
    def linear(cls, weight_cov=None, input_dim: Optional[int] = None) -> "Kernel":
        dim = _infer_dim(weight_cov, input_dim)
        return cls(Family.LINEAR, dim, weight_cov=weight_cov)

    @classmethod
    def neural_net(cls, weight_cov=None, input_dim: Optional[int] = None) -> "Kernel":
        """Kernel of ``erf(a.x)`` units; the square-rooted normalizer is used."""
        dim = _infer_dim(weight_cov, input_dim)
        return cls(Family.NEURAL_NET, dim, weight_cov=weight_cov)

    @classmethod
    def squared_exponential(cls, sigma: float = 1.0, input_dim: int = 1) -> "Kernel":
        return cls(Family.SQUARED_EXPONENTIAL, input_dim, sigma=sigma)

    @classmethod
    def nonstat_se(cls, sigma_g: float = 1.0, sigma_a: float = 1.0, input_dim: int = 1) -> "Kernel":
        return cls(Family.NONSTAT_SE, input_dim, sigma_g=sigma_g, sigma_a=sigma_a)

    @classmethod
    def arc_cosine_i(cls, input_dim: int = 1) -> "Kernel":
        return cls(Family.ARC_COSINE_I, input_dim)

    @classmethod
    def arc_cosine_ii(cls, input_dim: int = 1) -> "Kernel":
        return cls(Family.ARC_COSINE_II, input_dim)

    @classmethod
    def white_noise(cls, input_dim: int = 1) -> "Kernel":
        return cls(Family.WHITE_NOISE, input_dim)

    @classmethod
    def normalized_arcsine(cls, weight_cov=None, input_dim: Optional[int] = None) -> "Kernel":
        dim = _infer_dim(weight_cov, input_dim)
        return cls(Family.NORMALIZED_ARCSINE, dim, weight_cov=weight_cov)

    @classmethod
    def half_width_se(cls, sigma_g: float = 1.0, input_dim: int = 1) -> "Kernel":
        return cls(Family.HALF_WIDTH_SE, input_dim, sigma_g=sigma_g)

    @classmethod
    def sigmoid_tanh(cls, slope: float = 1.0, offset: float = 1.0, input_dim: int = 1) -> "Kernel":
        return cls(Family.SIGMOID_TANH, input_dim, slope=slope, offset=offset)

    # -- derived constants ----------------------------------------------

    @property
    def nonstat_constants(self) -> tuple[float, float, float]:
        """``(scale, c1, c2)`` of the non-stationary squared exponential.

        Completing the square in the Gaussian bump integral gives::

            k = scale * exp(-x.x/c1) * exp(-|x-x'|^2/c2) * exp(-x'.x'/c1)
            u = sigma_g^2 + 2 sigma_a^2
            c1 = 2u,  c2 = 2 sigma_g^2 u / sigma_a^2,  scale = (sigma_g^2/u)^(d/2)

        ``scale`` equals ``E[h(0; a)^2]``, so ``k(0, 0)`` is the exact second
        moment of the bump unit rather than 1.
        """
        g2 = self.sigma_g**2
        a2 = self.sigma_a**2
        u = g2 + 2.0 * a2
        return (g2 / u) ** (self.input_dim / 2.0), 2.0 * u, 2.0 * g2 * u / a2

    # -- evaluation -----------------------------------------------------

    def matrix(self, X, Y=None) -> np.ndarray:
        """Cross-covariance ``K[i, j] = k(X[i], Y[j])``."""
        X = as_points(X, self.input_dim)
        Y = X if Y is None else as_points(Y, self.input_dim)
        f = self.family

        if f is Family.LINEAR:
            return _bilinear(X, Y, self.weight_cov)

        if f is Family.NEURAL_NET:
            S = self.weight_cov
            num = 2.0 * _bilinear(X, Y, S)
            dx = 1.0 + 2.0 * _quad(X, S)
            dy = 1.0 + 2.0 * _quad(Y, S)
            arg = np.clip(num / np.sqrt(np.multiply.outer(dx, dy)), -1.0, 1.0)
            return (2.0 / np.pi) * np.arcsin(arg)

        if f is Family.SQUARED_EXPONENTIAL:
            return np.exp(-_sqdist(X, Y) / (2.0 * self.sigma**2))

        if f is Family.NONSTAT_SE:
            scale, c1, c2 = self.nonstat_constants
            nx = np.sum(X * X, axis=1) / c1
            ny = np.sum(Y * Y, axis=1) / c1
            return scale * np.exp(-np.add.outer(nx, ny) - _sqdist(X, Y) / c2)

        if f is Family.HALF_WIDTH_SE:
            return np.exp(-_sqdist(X, Y) / (4.0 * self.sigma_g**2))

        if f is Family.WHITE_NOISE:
            return _same(X, Y).astype(float)

        if f is Family.SIGMOID_TANH:
            return np.tanh(self.slope * _bilinear(X, Y, None) + self.offset)

        if f is Family.NORMALIZED_ARCSINE:
            # arcsin(cos t) = pi/2 - t; the angle is taken in the metric of weight_cov
            _reject_origin(X, Y, self.weight_cov)
            A = self._cov_root()
            return 1.0 - 2.0 * _angle(X @ A, Y @ A) / np.pi

        # arc-cosine families
        if f is Family.ARC_COSINE_I:
            _reject_origin(X, Y, None)
            return 1.0 - _angle(X, Y) / np.pi
        theta = _angle(X, Y)
        norms = np.multiply.outer(np.sqrt(np.sum(X * X, axis=1)), np.sqrt(np.sum(Y * Y, axis=1)))
        # |x||x'| cos(theta) replaced by x.x' so that k(x, x) = x.x exactly
        return norms * np.sin(theta) / np.pi + (1.0 - theta / np.pi) * _bilinear(X, Y, None)

    def _cov_root(self) -> np.ndarray:
        lam, vec = np.linalg.eigh(self.weight_cov)
        return vec * np.sqrt(np.clip(lam, 0.0, None))

    def diag(self, X) -> np.ndarray:
        X = as_points(X, self.input_dim)
        return np.array([self.matrix(x[None, :])[0, 0] for x in X])

    def __call__(self, x, x2) -> float:
        return eval_kernel(self, x, x2)

    def __repr__(self) -> str:
        keep = {
            Family.SQUARED_EXPONENTIAL: ("sigma",),
            Family.NONSTAT_SE: ("sigma_g", "sigma_a"),
            Family.HALF_WIDTH_SE: ("sigma_g",),
            Family.SIGMOID_TANH: ("slope", "offset"),
        }.get(self.family, ())
        parts = [f"{k}={getattr(self, k)!r}" for k in keep]
        if self.family in _USES_WEIGHT_COV:
            parts.append(f"weight_cov={self.weight_cov.tolist()!r}")
        return f"Kernel({self.family.value}, input_dim={self.input_dim}{''.join(', ' + p for p in parts)})"


def _infer_dim(weight_cov, input_dim):
    if weight_cov is None:
        return 1 if input_dim is None else input_dim
    dim = np.array(weight_cov, ndmin=2).shape[0]
    if input_dim is not None and input_dim != dim:
        raise ValidationError(f"input_dim={input_dim} disagrees with weight_cov of size {dim}")
    return dim


def as_points(P, dim: Optional[int] = None) -> np.ndarray:
    """Coerce to an ``(n, d)`` float array; a 1-D input is one point per entry only if ``dim == 1``."""
    P = np.asarray(P, dtype=float)
    if P.ndim == 0:
        P = P.reshape(1, 1)
    elif P.ndim == 1:
        P = P[:, None] if dim == 1 else P[None, :]
    if P.ndim != 2:
        raise ValidationError(f"points must be a 2-D array, got shape {P.shape}")
    if dim is not None and P.shape[1] != dim:
        raise ValidationError(f"dimension mismatch: expected {dim}, got {P.shape[1]}")
    if not np.all(np.isfinite(P)):
        raise ValidationError("points contain NaN or Inf")
    return P


def _bilinear(X, Y, S) -> np.ndarray:
    # averaging both orders makes k(x, y) == k(y, x) bit for bit
    if S is None:
        return 0.5 * (X @ Y.T + (Y @ X.T).T)
    return 0.5 * ((X @ S) @ Y.T + ((Y @ S) @ X.T).T)


def _quad(X, S) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", X, S, X)


def _sqdist(X, Y) -> np.ndarray:
    diff = X[:, None, :] - Y[None, :, :]
    return np.sum(diff * diff, axis=-1)


def _angle(X, Y) -> np.ndarray:
    """Angle between rows, accurate near 0 and pi (Kahan's half-angle form).

    ``arccos`` of a rounded cosine loses about sqrt(eps) near +-1, enough to
    make Gram matrices of nearly collinear points visibly indefinite.
    """
    nx = np.sqrt(np.sum(X * X, axis=1))
    ny = np.sqrt(np.sum(Y * Y, axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        U = np.where(nx[:, None] > 0, X / nx[:, None], 0.0)
        V = np.where(ny[:, None] > 0, Y / ny[:, None], 0.0)
    diff = U[:, None, :] - V[None, :, :]
    summ = U[:, None, :] + V[None, :, :]
    return 2.0 * np.arctan2(
        np.sqrt(np.sum(diff * diff, axis=-1)), np.sqrt(np.sum(summ * summ, axis=-1))
    )


def _same(X, Y) -> np.ndarray:
    return np.all(X[:, None, :] == Y[None, :, :], axis=-1)


def _reject_origin(X, Y, S):
    for P in (X, Y):
        q = np.sum(P * P, axis=1) if S is None else _quad(P, S)
        if np.any(q <= 0):
            raise ValidationError("normalized kernel is undefined at the zero vector")


def eval_kernel(kernel: Kernel, x, x2) -> float:
    """``k(x, x2)`` for two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != (kernel.input_dim,) or x2.shape != (kernel.input_dim,):
        raise ValidationError(
            f"dimension mismatch: kernel takes {kernel.input_dim}-vectors, "
            f"got {x.shape} and {x2.shape}"
        )
    return float(kernel.matrix(x[None, :], x2[None, :])[0, 0])


# -- Gram matrices --------------------------------------------------------


@dataclass(frozen=True)
class JitterPolicy:
    """Diagonal inflation ladder, relative to the mean absolute diagonal.

    Cholesky is tried with no jitter first, then at ``start``, ``start *
    factor``, ... up to ``cap``.
    """

    start: float = 1e-12
    factor: float = 10.0
    cap: float = 1e-6

    def ladder(self, scale: float) -> list[float]:
        steps = [0.0]
        rel = self.start
        while rel <= self.cap * (1 + 1e-9):
            steps.append(rel * scale)
            rel *= self.factor
        return steps


DEFAULT_JITTER = JitterPolicy()


def cholesky_with_jitter(A: np.ndarray, policy: JitterPolicy = DEFAULT_JITTER):
    """Return ``(L, jitter)`` with ``L L^T = A + jitter I``.

    Raises
    ------
    NumericalError
        If the factorization fails at every rung of the ladder.
    """
    A = np.asarray(A, dtype=float)
    d = np.abs(np.diag(A))
    scale = float(d.mean()) if d.size and d.mean() > 0 else 1.0
    eye = np.eye(A.shape[0])
    for jitter in policy.ladder(scale):
        try:
            L = scipy.linalg.cholesky(A + jitter * eye, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return L, jitter
    raise NumericalError(
        f"Cholesky failed up to jitter {policy.cap:g} x mean diagonal; "
        "the matrix is not positive definite (invalid kernel?)"
    )


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Kernel matrix on a point set.

    ``values`` is the raw kernel matrix; ``cholesky`` factors ``values +
    jitter * I``.
    """

    values: np.ndarray
    points: np.ndarray
    jitter: float
    cholesky: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


def kernel_matrix(kernel: Kernel, points, allow_invalid: bool = False) -> np.ndarray:
    """Symmetric Gram matrix without jitter or factorization."""
    if kernel.family is Family.SIGMOID_TANH and not allow_invalid:
        raise ValidationError(
            "the sigmoid kernel is not positive semidefinite; pass allow_invalid=True "
            "to use it outside the PD audit"
        )
    P = as_points(points, kernel.input_dim)
    if P.shape[0] == 0:
        raise ValidationError("point set is empty")
    K = kernel.matrix(P)
    return np.triu(K) + np.triu(K, 1).T


def gram(
    kernel: Kernel,
    points,
    jitter_policy: JitterPolicy = DEFAULT_JITTER,
    allow_invalid: bool = False,
) -> GramMatrix:
    """Assemble and factor the Gram matrix, escalating jitter as needed."""
    P = as_points(points, kernel.input_dim)
    K = kernel_matrix(kernel, P, allow_invalid=allow_invalid)
    L, jitter = cholesky_with_jitter(K, jitter_policy)
    return GramMatrix(values=K, points=P, jitter=jitter, cholesky=L)


def cross_covariance(kernel: Kernel, points, target) -> np.ndarray:
    """Vector ``(k(x_1, x*), ..., k(x_n, x*))``."""
    P = as_points(points, kernel.input_dim)
    t = np.atleast_1d(np.asarray(target, dtype=float))
    if t.shape != (kernel.input_dim,):
        raise ValidationError(f"dimension mismatch: target has shape {t.shape}")
    return kernel.matrix(P, t[None, :])[:, 0]


def variogram(kernel: Kernel, lag) -> np.ndarray | float:
    """Semivariogram ``k(0) - k(h)`` of a stationary kernel.

    The stationary families here are isotropic, so the lag is taken along
    the first axis.  ``lag`` may be a scalar or an array; ``inf`` gives the
    sill.
    """
    if kernel.family not in STATIONARY:
        raise ValidationError(f"variogram needs a stationary kernel, got {kernel.family.value}")
    h = np.asarray(lag, dtype=float)
    if np.any(np.isnan(h)) or np.any(h < 0):
        raise ValidationError("lag must be nonnegative")
    origin = np.zeros((1, kernel.input_dim))
    k0 = kernel.matrix(origin)[0, 0]
    flat = h.ravel()
    finite = np.isfinite(flat)
    out = np.full(flat.shape, k0)  # k(inf) = 0 for every stationary family here
    if finite.any():
        P = np.zeros((int(finite.sum()), kernel.input_dim))
        P[:, 0] = flat[finite]
        out[finite] = k0 - kernel.matrix(origin, P)[0]
    out = out.reshape(h.shape)
    return float(out) if out.ndim == 0 else out


# -- positive-definiteness audit ------------------------------------------


@dataclass(frozen=True, eq=False)
class PDAuditReport:
    is_violated: bool
    min_eigenvalue: float
    witness_points: np.ndarray
    witness_trial: int
    n_trials: int
    tolerance: float


def audit_positive_definite(
    kernel: Kernel,
    n_points: int,
    dim: Optional[int] = None,
    n_trials: int = 100,
    seed: int = 0,
    low: float = -3.0,
    high: float = 3.0,
) -> PDAuditReport:
    """Search random point sets for a Gram matrix with a negative eigenvalue.

    Points are uniform on ``[low, high]^dim``.  A violation is reported
    when the smallest eigenvalue falls below ``-1e-8`` times the largest
    absolute diagonal entry of that Gram matrix (no jitter is added).  The
    witness is the point set with the most negative eigenvalue seen.
    """
    dim = kernel.input_dim if dim is None else dim
    if dim != kernel.input_dim:
        raise ValidationError(f"dim={dim} does not match kernel input_dim={kernel.input_dim}")
    if n_points < 2:
        raise ValidationError("n_points must be >= 2")
    if n_trials < 1:
        raise ValidationError("n_trials must be >= 1")
    if not high > low:
        raise ValidationError("need high > low")

    worst = np.inf
    worst_ratio = np.inf
    witness = None
    witness_trial = -1
    for t in range(n_trials):
        rng = substream(seed, PD_AUDIT, t)
        P = rng.uniform(low, high, size=(n_points, dim))
        K = kernel_matrix(kernel, P, allow_invalid=True)
        lam = float(np.linalg.eigvalsh(K)[0])
        ratio = lam / max(float(np.max(np.abs(np.diag(K)))), np.finfo(float).tiny)
        if lam < worst:
            worst, worst_ratio, witness, witness_trial = lam, ratio, P, t
    tol = 1e-8
    return PDAuditReport(
        is_violated=bool(worst_ratio < -tol),
        min_eigenvalue=worst,
        witness_points=witness,
        witness_trial=witness_trial,
        n_trials=n_trials,
        tolerance=tol,
    )
