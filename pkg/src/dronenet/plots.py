"""Minimal standalone SVG emission.

Plots are batch artifacts (no display server); hand-rolled markup keeps
the bytes deterministic for a given input. Three chart types cover the
reports: heatmaps (site x hour activation), line charts (robustness
curves, beta sweeps) and histograms (prior predictive counts).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

__all__ = ["svg_heatmap", "svg_lines", "svg_hist"]

_PALETTE = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"]


def _f(v: float) -> str:
    return f"{v:.2f}"


def _heat_color(v: float) -> str:
    """0 -> near-white, 1 -> deep blue."""
    v = min(max(v, 0.0), 1.0)
    r = round(247 - 171 * v)
    g = round(251 - 132 * v)
    b = round(255 - 87 * v)
    return f"rgb({r},{g},{b})"


def _text(x, y, s, size=11, anchor="start") -> str:
    return (f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" '
            f'font-size="{size}" text-anchor="{anchor}">{s}</text>')


def _document(width, height, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>',
                      *body, "</svg>"]) + "\n"


def svg_heatmap(values, row_labels, col_labels, title: str, path) -> Path:
    """Grid heatmap of values in [0, 1]."""
    values = np.asarray(values, dtype=float)
    rows, cols = values.shape
    cell, left, top = 16, 90, 48
    width = left + cols * cell + 20
    height = top + rows * cell + 40
    body = [_text(left, 24, title, size=14)]
    for i in range(rows):
        for j in range(cols):
            body.append(f'<rect x="{left + j * cell}" y="{top + i * cell}" '
                        f'width="{cell}" height="{cell}" fill="{_heat_color(values[i, j])}" '
                        f'stroke="#dddddd" stroke-width="0.5"/>')
        body.append(_text(left - 6, top + i * cell + cell - 4, str(row_labels[i]),
                          size=9, anchor="end"))
    for j in range(cols):
        if cols <= 30 or j % 2 == 0:
            body.append(_text(left + j * cell + cell / 2, top + rows * cell + 14,
                              str(col_labels[j]), size=9, anchor="middle"))
    return _write(path, _document(width, height, body))


def svg_lines(x, series: dict, title: str, xlabel: str, ylabel: str, path,
              y_range: tuple | None = None) -> Path:
    """Polyline chart; ``series`` maps label -> y values aligned with x."""
    x = np.asarray(x, dtype=float)
    width, height = 560, 360
    left, right, top, bottom = 64, 24, 48, 48
    plot_w, plot_h = width - left - right, height - top - bottom
    ys = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    finite = ys[np.isfinite(ys)]
    if y_range is None:
        lo = float(finite.min()) if finite.size else 0.0
        hi = float(finite.max()) if finite.size else 1.0
        pad = 0.05 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.1
        lo, hi = lo - pad, hi + pad
    else:
        lo, hi = y_range
    x_lo, x_hi = float(x.min()), float(x.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return top + (hi - v) / (hi - lo) * plot_h

    body = [_text(left, 24, title, size=14),
            f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
            f'fill="none" stroke="#444444"/>']
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        yv = lo + frac * (hi - lo)
        body.append(_text(left - 6, sy(yv) + 4, f"{yv:.3g}", size=9, anchor="end"))
        xv = x_lo + frac * (x_hi - x_lo)
        body.append(_text(sx(xv), height - bottom + 16, f"{xv:.3g}", size=9,
                          anchor="middle"))
    for idx, (label, yvals) in enumerate(series.items()):
        yvals = np.asarray(yvals, dtype=float)
        pts = " ".join(f"{_f(sx(xi))},{_f(sy(yi))}" for xi, yi in zip(x, yvals)
                       if math.isfinite(yi))
        color = _PALETTE[idx % len(_PALETTE)]
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                    f'stroke-width="1.8"/>')
        body.append(_text(left + plot_w - 4, top + 16 + 14 * idx, label, size=10,
                          anchor="end"))
    body.append(_text(left + plot_w / 2, height - 12, xlabel, size=11, anchor="middle"))
    body.append(_text(14, top - 10, ylabel, size=11))
    return _write(path, _document(width, height, body))


def svg_hist(values, title: str, xlabel: str, path, bins: int | None = None) -> Path:
    """Histogram of integer-ish values (prior predictive counts)."""
    values = np.asarray(values, dtype=float)
    lo, hi = int(values.min()), int(values.max())
    edges = np.arange(lo, hi + 2) - 0.5 if bins is None else np.histogram_bin_edges(
        values, bins=bins)
    counts, edges = np.histogram(values, bins=edges)
    width, height = 560, 360
    left, right, top, bottom = 64, 24, 48, 48
    plot_w, plot_h = width - left - right, height - top - bottom
    cmax = counts.max() if counts.size else 1
    body = [_text(left, 24, title, size=14),
            f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
            f'fill="none" stroke="#444444"/>']
    for i, c in enumerate(counts):
        x0 = left + (edges[i] - edges[0]) / (edges[-1] - edges[0]) * plot_w
        x1 = left + (edges[i + 1] - edges[0]) / (edges[-1] - edges[0]) * plot_w
        h = plot_h * (c / cmax)
        body.append(f'<rect x="{_f(x0)}" y="{_f(top + plot_h - h)}" '
                    f'width="{_f(max(x1 - x0 - 1.0, 0.5))}" height="{_f(h)}" '
                    f'fill="{_PALETTE[0]}"/>')
    for frac in (0.0, 0.5, 1.0):
        xv = edges[0] + frac * (edges[-1] - edges[0])
        body.append(_text(left + frac * plot_w, height - bottom + 16, f"{xv:.3g}",
                          size=9, anchor="middle"))
    body.append(_text(left - 6, top + 8, str(int(cmax)), size=9, anchor="end"))
    body.append(_text(left + plot_w / 2, height - 12, xlabel, size=11, anchor="middle"))
    return _write(path, _document(width, height, body))


def _write(path, content: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)
    return path
