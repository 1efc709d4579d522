"""Band depth of curves and a depth-based two-sample rank test.

Conventions, fixed here because results depend on them:

* bands are spanned by pairs of curves (J = 2) and are closed, so a curve
  touching a band edge counts as inside;
* a pair that includes the curve being scored never counts toward its
  depth, but the denominator is still all ``C(n, 2)`` pairs.

With these, the middle one of three nested curves has band depth 1/3.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.stats import norm, rankdata

from ._rng import parallel_map
from .ensemble import PathEnsemble
from .errors import ValidationError

EXACT_BELOW = 10


class DepthMethod(str, enum.Enum):
    BAND = "bd"
    MODIFIED_BAND = "mbd"


@dataclass(frozen=True, eq=False)
class DepthVector:
    values: np.ndarray
    method: DepthMethod


@dataclass(frozen=True, eq=False)
class RankTestResult:
    """Outcome of :func:`rank_test`.

    ``statistic`` is the sum of the pooled mid-ranks of group A.
    ``degenerate`` is set when the depths cannot separate the groups at all
    (every pooled depth tied, or both groups with identical depth values),
    in which case ``p_value`` is 1.
    """

    statistic: float
    p_value: float
    depths: DepthVector
    group_sizes: tuple[int, int]
    exact: bool
    degenerate: bool = False

    @property
    def method(self) -> DepthMethod:
        return self.depths.method

    def csv_row(self) -> str:
        m1, m2 = self.group_sizes
        return f"{self.statistic!r},{self.p_value!r},{m1},{m2},{self.method.value}"


def _curves(ensemble) -> np.ndarray:
    Y = ensemble.paths if isinstance(ensemble, PathEnsemble) else np.asarray(ensemble, dtype=float)
    if Y.ndim != 2:
        raise ValidationError("curves must be an (n, g) array")
    if Y.shape[0] < 3:
        raise ValidationError(f"band depth needs at least 3 curves, got {Y.shape[0]}")
    return Y


def band_depths(ensemble, workers: int = 1) -> np.ndarray:
    """Band depth of every curve.

    A pair ``(i, j)`` contains curve ``c`` on the whole grid exactly when no
    grid point has both ``i`` and ``j`` strictly above ``c``, and none has
    both strictly below.  The above/below sets are bit-packed into 64-bit words so each
    curve costs one ``n x n`` pass over ``g / 64`` words.
    """
    Y = _curves(ensemble)
    n = Y.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), 1)

    def one(c):
        above = _pack64(Y > Y[c])
        below = _pack64(Y < Y[c])
        clash = np.zeros((n, n), dtype=bool)
        for w in range(above.shape[1]):
            clash |= (above[:, w, None] & above[None, :, w]) != 0
            clash |= (below[:, w, None] & below[None, :, w]) != 0
        inside = ~clash & upper
        inside[c, :] = False
        inside[:, c] = False
        return int(inside.sum())

    counts = parallel_map(one, range(n), workers)
    return np.array(counts) / comb(n, 2)


def _pack64(mask: np.ndarray) -> np.ndarray:
    packed = np.packbits(mask, axis=1)
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    return np.ascontiguousarray(packed).view(np.uint64)


def modified_band_depths(ensemble) -> np.ndarray:
    """Modified band depth of every curve.

    At each grid point, the pairs of other curves whose band misses ``c``
    are those with both members strictly above or both strictly below, so
    the containing count is ``C(n-1, 2) - C(a, 2) - C(b, 2)``.
    """
    Y = _curves(ensemble)
    n, g = Y.shape
    a = np.sum(Y[None, :, :] > Y[:, None, :], axis=1)
    b = np.sum(Y[None, :, :] < Y[:, None, :], axis=1)
    inside = comb(n - 1, 2) - a * (a - 1) // 2 - b * (b - 1) // 2
    total = inside.sum(axis=1)
    denom = g * comb(n, 2)
    return np.array([int(t) / denom for t in total])


def band_depth(ensemble, curve_index: int) -> float:
    Y = _curves(ensemble)
    _check_index(Y, curve_index)
    return float(band_depths(Y)[curve_index])


def modified_band_depth(ensemble, curve_index: int) -> float:
    Y = _curves(ensemble)
    _check_index(Y, curve_index)
    return float(modified_band_depths(Y)[curve_index])


def _check_index(Y, i):
    if not 0 <= i < Y.shape[0]:
        raise ValidationError(f"curve index {i} out of range for {Y.shape[0]} curves")


def depths(ensemble, method=DepthMethod.BAND, workers: int = 1) -> DepthVector:
    method = DepthMethod(method)
    if method is DepthMethod.BAND:
        vals = band_depths(ensemble, workers)
    else:
        vals = modified_band_depths(ensemble)
    return DepthVector(vals, method)


# -- rank-sum machinery ---------------------------------------------------


def exact_rank_sum_pvalue(ranks: np.ndarray, in_a: np.ndarray) -> float:
    """Two-sided permutation p-value of the group-A rank sum.

    Counts every size-``m`` subset of the pooled mid-ranks (``m`` the
    smaller group) whose sum deviates from its mean at least as much as the
    observed one.  Mid-ranks are doubled to integers and subsets are
    counted by dynamic programming over ``(size, sum)``.
    """
    ranks = np.asarray(ranks, dtype=float)
    in_a = np.asarray(in_a, dtype=bool)
    N = ranks.size
    small = in_a if in_a.sum() <= N - in_a.sum() else ~in_a
    k = int(small.sum())
    r2 = np.rint(2 * ranks).astype(np.int64)
    top = int(np.sort(r2)[-k:].sum())
    counts = np.zeros((k + 1, top + 1))
    counts[0, 0] = 1.0
    for r in r2:
        for j in range(k, 0, -1):
            counts[j, r:] += counts[j - 1, : top + 1 - r]
    dist = counts[k]
    center = k * (N + 1)  # twice the mean rank sum
    obs = abs(int(r2[small].sum()) - center)
    sums = np.arange(top + 1)
    tail = dist[np.abs(sums - center) >= obs].sum()
    return float(min(1.0, tail / comb(N, k)))


def normal_rank_sum_pvalue(ranks: np.ndarray, in_a: np.ndarray) -> float:
    """Two-sided normal approximation with tie and continuity corrections."""
    ranks = np.asarray(ranks, dtype=float)
    in_a = np.asarray(in_a, dtype=bool)
    N = ranks.size
    m1 = int(in_a.sum())
    m2 = N - m1
    _, t = np.unique(ranks, return_counts=True)
    tie = float(np.sum(t.astype(float) ** 3 - t)) / (N * (N - 1))
    var = m1 * m2 / 12.0 * ((N + 1) - tie)
    if var <= 0:
        return 1.0
    dev = abs(ranks[in_a].sum() - m1 * (N + 1) / 2.0)
    z = max(dev - 0.5, 0.0) / np.sqrt(var)
    return float(min(1.0, 2.0 * norm.sf(z)))


def rank_sum_test(pooled_depths, m1: int):
    """Rank-sum statistic and p-value when the first ``m1`` entries are group A."""
    d = np.asarray(pooled_depths, dtype=float)
    N = d.size
    m2 = N - m1
    in_a = np.zeros(N, dtype=bool)
    in_a[:m1] = True
    ranks = rankdata(d, method="average")
    stat = float(ranks[:m1].sum())
    exact = min(m1, m2) < EXACT_BELOW
    if exact:
        p = exact_rank_sum_pvalue(ranks, in_a)
    else:
        p = normal_rank_sum_pvalue(ranks, in_a)
    return stat, p, exact


def rank_test(
    group_a: PathEnsemble,
    group_b: PathEnsemble,
    method=DepthMethod.BAND,
    workers: int = 1,
) -> RankTestResult:
    """Test whether two ensembles of curves come from the same population.

    Pools the curves, scores each by depth, ranks the depths (mid-ranks for
    ties) and applies a two-sided rank-sum test to the group labels.  The
    p-value is exact when the smaller group has fewer than 10 curves and
    uses the tie-corrected normal approximation otherwise.
    """
    if not group_a.same_grid(group_b):
        raise ValidationError("the two ensembles are on different grids")
    m1, m2 = group_a.n_paths, group_b.n_paths
    if min(m1, m2) < 5:
        raise ValidationError(f"each group needs at least 5 curves, got {m1} and {m2}")
    pooled = np.vstack([group_a.paths, group_b.paths])
    dv = depths(pooled, method, workers)
    d = dv.values
    all_tied = bool(np.all(d == d[0]))
    mirrored = m1 == m2 and np.array_equal(np.sort(d[:m1]), np.sort(d[m1:]))
    stat, p, exact = rank_sum_test(d, m1)
    if all_tied:
        p = 1.0
    return RankTestResult(
        statistic=stat,
        p_value=p,
        depths=dv,
        group_sizes=(m1, m2),
        exact=exact,
        degenerate=all_tied or mirrored,
    )
