"""Sample-path ensembles on a shared grid."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernels import as_points


class Provenance(str, enum.Enum):
    GP = "GP"
    MLP = "MLP"


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """``m`` sample paths evaluated at the same ``g`` grid points.

    Attributes
    ----------
    grid : ndarray, shape (g, d)
    paths : ndarray, shape (m, g)
    provenance : Provenance
    seed : int
    """

    grid: np.ndarray
    paths: np.ndarray
    provenance: Provenance
    seed: int

    def __post_init__(self):
        grid = as_points(self.grid, 1 if np.ndim(self.grid) == 1 else None)
        paths = np.asarray(self.paths, dtype=float)
        if paths.ndim == 1:
            paths = paths[None, :]
        if paths.ndim != 2 or paths.shape[1] != grid.shape[0]:
            raise ValidationError(
                f"paths must be (m, {grid.shape[0]}), got {paths.shape}"
            )
        if paths.shape[0] < 1:
            raise ValidationError("ensemble has no paths")
        if not np.all(np.isfinite(paths)):
            raise ValidationError("paths contain NaN or Inf")
        if grid.shape[1] == 1 and grid.shape[0] > 1 and np.any(np.diff(grid[:, 0]) <= 0):
            raise ValidationError("1-D grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def n_grid(self) -> int:
        return self.paths.shape[1]

    def same_grid(self, other: "PathEnsemble") -> bool:
        return self.grid.shape == other.grid.shape and np.array_equal(self.grid, other.grid)


def linear_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """``count`` equally spaced points on ``[lo, hi]``, endpoints included, as a column."""
    if count < 1:
        raise ValidationError("grid count must be >= 1")
    if count > 1 and not hi > lo:
        raise ValidationError("grid needs hi > lo")
    return np.linspace(lo, hi, count)[:, None]


def parse_grid(text: str) -> np.ndarray:
    """Parse ``lo:hi:count``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must look like lo:hi:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"bad grid {text!r}: {exc}") from None
    return linear_grid(lo, hi, count)
