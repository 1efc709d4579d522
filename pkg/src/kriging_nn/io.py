"""CSV readers and writers for points, matrices, observations and ensembles.

Floats are written with ``repr`` so that a value read back is the value
written, and so reruns produce byte-identical files.
"""

from __future__ import annotations

import os
from typing import Iterable, Optional

import numpy as np

from .ensemble import PathEnsemble, Provenance
from .errors import ValidationError


def fmt(v) -> str:
    return repr(float(v))


def _write_lines(path, lines: Iterable[str]) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def read_rows(path, header: bool = False):
    """Parse a numeric CSV into ``(comments, column_names, rows)``.

    Lines starting with ``#`` are collected as comments.  With ``header``
    the first non-comment line is taken as column names.  Errors name the
    offending line.
    """
    comments: list[str] = []
    names: Optional[list[str]] = None
    rows: list[list[float]] = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
                continue
            cells = [c.strip() for c in line.split(",")]
            if header and names is None:
                names = cells
                width = len(cells)
                continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
            if not all(np.isfinite(vals)):
                raise ValidationError(f"{path}:{lineno}: non-finite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValidationError(
                    f"{path}:{lineno}: expected {width} columns, found {len(vals)}"
                )
            rows.append(vals)
    return comments, names, rows


def _tags(comments: list[str]) -> dict[str, str]:
    out = {}
    for c in comments:
        for tok in c.split():
            if "=" in tok:
                k, v = tok.split("=", 1)
                out[k] = v
    return out


# -- points and matrices --------------------------------------------------


def write_points(path, points) -> None:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    _write_lines(path, (",".join(fmt(v) for v in row) for row in P))


def read_points(path) -> np.ndarray:
    _, _, rows = read_rows(path)
    if not rows:
        raise ValidationError(f"{path}: no points")
    return np.array(rows)


def write_matrix(path, values, jitter: float = 0.0) -> None:
    K = np.atleast_2d(np.asarray(values, dtype=float))
    lines = [f"# n={K.shape[0]} jitter={fmt(jitter)}"]
    lines += [",".join(fmt(v) for v in row) for row in K]
    _write_lines(path, lines)


def read_matrix(path) -> tuple[np.ndarray, float]:
    comments, _, rows = read_rows(path)
    tags = _tags(comments)
    K = np.array(rows)
    if "n" in tags and int(tags["n"]) != K.shape[0]:
        raise ValidationError(f"{path}: header says n={tags['n']} but found {K.shape[0]} rows")
    return K, float(tags.get("jitter", 0.0))


# -- observations ---------------------------------------------------------


def read_observations(path):
    """Rows ``x1,...,xd,y``; returns ``(points, values)``."""
    _, _, rows = read_rows(path)
    if not rows:
        raise ValidationError(f"{path}: no observations")
    A = np.array(rows)
    if A.shape[1] < 2:
        raise ValidationError(f"{path}: need at least one coordinate column and a value column")
    return A[:, :-1], A[:, -1]


def write_observations(path, points, values) -> None:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] == 1 and len(np.atleast_1d(values)) > 1:
        P = P.T
    _write_lines(
        path,
        (",".join([*(fmt(v) for v in p), fmt(y)]) for p, y in zip(P, np.atleast_1d(values))),
    )


def write_predictions(path, predictions) -> None:
    dim = len(predictions[0].target) if predictions else 1
    head = ",".join([*(f"x{i + 1}" for i in range(dim)), "mean", "variance"])
    body = (
        ",".join([*(fmt(v) for v in p.target), fmt(p.mean), fmt(p.variance)])
        for p in predictions
    )
    _write_lines(path, [head, *body])


# -- ensembles ------------------------------------------------------------


def write_ensemble(path, ens: PathEnsemble) -> None:
    if ens.grid.shape[1] != 1:
        raise ValidationError("ensemble CSV supports 1-D grids only")
    lines = [f"# provenance={ens.provenance.value} seed={ens.seed}"]
    lines.append(",".join(fmt(v) for v in ens.grid[:, 0]))
    lines += [",".join(fmt(v) for v in row) for row in ens.paths]
    _write_lines(path, lines)


def read_ensemble(path) -> PathEnsemble:
    comments, _, rows = read_rows(path)
    tags = _tags(comments)
    if len(rows) < 2:
        raise ValidationError(f"{path}: need a grid row and at least one path")
    try:
        prov = Provenance(tags.get("provenance", "GP"))
    except ValueError:
        raise ValidationError(f"{path}: unknown provenance {tags.get('provenance')!r}") from None
    return PathEnsemble(
        grid=np.array(rows[0])[:, None],
        paths=np.array(rows[1:]),
        provenance=prov,
        seed=int(tags.get("seed", 0)),
    )


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
