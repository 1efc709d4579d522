"""Deterministic SVG line plots of path ensembles."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .ensemble import PathEnsemble
from .errors import ValidationError

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def ensemble_svg(ens: PathEnsemble, title: str = "", width: int = 640, height: int = 400) -> str:
    """One polyline per path over a 1-D grid, with a frame and axis labels."""
    if ens.grid.shape[1] != 1:
        raise ValidationError("SVG plots need a 1-D grid")
    x = ens.grid[:, 0]
    Y = ens.paths
    left, right, top, bottom = 56, 16, 32 if title else 16, 36
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(Y.min()), float(Y.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pad = 0.05 * (y1 - y0) if y1 > y0 else 0.5
    y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>'
        )
    for v in np.linspace(x0, x1, 5):
        out.append(
            f'<text x="{sx(v):.2f}" y="{height - 12}" text-anchor="middle" font-size="11">{v:.3g}</text>'
        )
    for v in np.linspace(y0, y1, 5):
        out.append(
            f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end" font-size="11">{v:.3g}</text>'
        )
    for i, row in enumerate(Y):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, row))
        out.append(
            f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" '
            f'stroke-width="1.2" points="{pts}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, ens: PathEnsemble, title: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(ensemble_svg(ens, title))
