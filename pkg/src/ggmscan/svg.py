"""Minimal native SVG emission for the standard figures.

Line plots (metric vs regularization, with optional shaded quantile bands)
and heat maps (regions by subjects). Deliberately tiny: polylines, rects,
text, and axis ticks — enough for figure-ready output without a plotting
dependency. CSV tables are always written alongside by the callers, so
anything fancier can be re-plotted externally.
"""
from __future__ import annotations

import math

import numpy as np

from .core import ValidationError

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 72, 24, 36, 56


def _esc(s: str) -> str:
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return f"{v:.1e}"
    return f"{v:.4g}"


class _Frame:
    """Data-to-pixel transform for one plot area."""

    def __init__(self, x_lo, x_hi, y_lo, y_hi, log_x=False):
        if log_x:
            x_lo, x_hi = math.log10(x_lo), math.log10(x_hi)
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        pad = 0.05 * (y_hi - y_lo) or 1.0
        y_lo, y_hi = y_lo - pad, y_hi + pad
        self.x_lo, self.x_hi, self.y_lo, self.y_hi = x_lo, x_hi, y_lo, y_hi
        self.log_x = log_x

    def x(self, v: float) -> float:
        if self.log_x:
            v = math.log10(v)
        return _ML + (v - self.x_lo) / (self.x_hi - self.x_lo) * (_W - _ML - _MR)

    def y(self, v: float) -> float:
        return _H - _MB - (v - self.y_lo) / (self.y_hi - self.y_lo) * (_H - _MT - _MB)


def _axes(frame: _Frame, xlabel: str, ylabel: str, title: str) -> list[str]:
    parts = [
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="20" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{_esc(title)}</text>',
        f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">{_esc(xlabel)}</text>',
        f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">'
        f'{_esc(ylabel)}</text>',
    ]
    if frame.log_x:
        lo_e = math.floor(frame.x_lo)
        hi_e = math.ceil(frame.x_hi)
        xticks = [10.0 ** e for e in range(int(lo_e), int(hi_e) + 1)]
        xticks = [t for t in xticks
                  if frame.x_lo - 1e-9 <= math.log10(t) <= frame.x_hi + 1e-9]
    else:
        xticks = _ticks(frame.x_lo, frame.x_hi)
    for t in xticks:
        px = frame.x(t)
        parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" '
                     f'y2="{_H - _MB + 5}" stroke="#333"/>')
        parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{_fmt(t)}</text>')
    for t in _ticks(frame.y_lo, frame.y_hi):
        py = frame.y(t)
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" '
                     'stroke="#333"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{_fmt(t)}</text>')
    return parts


def line_plot(path, x, curves, labels, title="", xlabel="", ylabel="",
              log_x=False, bands=None) -> None:
    """Write a multi-curve line plot.

    curves: sequence of y arrays, one per label. bands: optional sequence of
    (lower, upper, label) triples drawn as shaded regions behind the curves.
    """
    x = np.asarray(x, dtype=float)
    curves = [np.asarray(c, dtype=float) for c in curves]
    if not curves or len(curves) != len(labels):
        raise ValidationError("need one label per curve")
    for c in curves:
        if c.shape != x.shape:
            raise ValidationError("curve length does not match x")
    if log_x and (x <= 0).any():
        raise ValidationError("log-scale x requires positive values")
    ys = np.concatenate(curves + [np.asarray(b[i], dtype=float)
                                  for b in (bands or []) for i in (0, 1)])
    ys = ys[np.isfinite(ys)]
    if ys.size == 0:
        raise ValidationError("no finite values to plot")
    frame = _Frame(float(x.min()), float(x.max()), float(ys.min()), float(ys.max()), log_x)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>']
    parts += _axes(frame, xlabel, ylabel, title)
    for bi, (lo, hi, _blabel) in enumerate(bands or []):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        pts = [f"{frame.x(xv):.1f},{frame.y(yv):.1f}" for xv, yv in zip(x, lo)]
        pts += [f"{frame.x(xv):.1f},{frame.y(yv):.1f}" for xv, yv in zip(x[::-1], hi[::-1])]
        color = _PALETTE[bi % len(_PALETTE)]
        parts.append(f'<polygon points="{" ".join(pts)}" fill="{color}" opacity="0.15"/>')
    for ci, (c, label) in enumerate(zip(curves, labels)):
        color = _PALETTE[ci % len(_PALETTE)]
        pts = " ".join(f"{frame.x(xv):.1f},{frame.y(yv):.1f}"
                       for xv, yv in zip(x, c) if np.isfinite(yv))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.8"/>')
        ly = _MT + 16 + 16 * ci
        parts.append(f'<line x1="{_W - _MR - 120}" y1="{ly}" x2="{_W - _MR - 96}" '
                     f'y2="{ly}" stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{_W - _MR - 90}" y="{ly + 4}" font-size="11" '
                     f'font-family="sans-serif">{_esc(label)}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def _heat_color(v: float) -> str:
    """White -> orange -> dark red ramp on [0, 1]."""
    v = min(max(v, 0.0), 1.0)
    if v < 0.5:
        f = v / 0.5
        r, g, b = 255, int(255 - 90 * f), int(255 - 255 * f)
    else:
        f = (v - 0.5) / 0.5
        r, g, b = int(255 - 116 * f), int(165 - 165 * f), 0
    return f"#{r:02x}{g:02x}{b:02x}"


def heat_map(path, matrix, row_labels, col_labels, title="", vmax=None) -> None:
    """Write a heat map of a nonnegative matrix (rows x columns).

    NaN cells render gray. Values are scaled by vmax (default: the finite
    maximum) into a white-to-red ramp.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ValidationError("heat map needs a 2-D matrix")
    rows, cols = m.shape
    if rows != len(row_labels) or cols != len(col_labels):
        raise ValidationError("label counts do not match matrix shape")
    finite = m[np.isfinite(m)]
    top = float(vmax) if vmax is not None else (float(finite.max()) if finite.size else 1.0)
    if top <= 0:
        top = 1.0
    label_w = 70
    cell = max(6, min(22, int(520 / max(rows, cols))))
    width = label_w + cols * cell + 100
    height = 40 + rows * cell + 50
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14" '
             f'font-family="sans-serif">{_esc(title)}</text>']
    for i in range(rows):
        y = 40 + i * cell
        for j in range(cols):
            v = m[i, j]
            color = "#bbbbbb" if not np.isfinite(v) else _heat_color(v / top)
            parts.append(f'<rect x="{label_w + j * cell}" y="{y}" width="{cell}" '
                         f'height="{cell}" fill="{color}" stroke="#eee" stroke-width="0.5"/>')
        if cell >= 9:
            parts.append(f'<text x="{label_w - 4}" y="{y + cell * 0.75:.0f}" text-anchor="end" '
                         f'font-size="{min(cell - 2, 10)}" font-family="sans-serif">'
                         f'{_esc(row_labels[i])}</text>')
    if cell >= 9:
        for j in range(cols):
            xc = label_w + j * cell + cell // 2
            yb = 40 + rows * cell + 12
            parts.append(f'<text x="{xc}" y="{yb}" text-anchor="middle" '
                         f'font-size="{min(cell - 2, 10)}" font-family="sans-serif">'
                         f'{_esc(col_labels[j])}</text>')
    # color scale
    sx = label_w + cols * cell + 16
    for k in range(40):
        parts.append(f'<rect x="{sx}" y="{40 + k * 4}" width="14" height="4" '
                     f'fill="{_heat_color(1.0 - k / 39)}"/>')
    parts.append(f'<text x="{sx + 18}" y="48" font-size="10" font-family="sans-serif">'
                 f'{_fmt(top)}</text>')
    parts.append(f'<text x="{sx + 18}" y="{40 + 160}" font-size="10" '
                 f'font-family="sans-serif">0</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
