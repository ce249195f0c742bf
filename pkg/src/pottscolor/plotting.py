"""Dependency-free SVG line plots with error bars.

``kind`` selects the layout: ``scaling`` (conflicts vs iterations, log x),
``fitparams`` (fit parameter vs connectivity, with threshold and training
range markers) and ``noise`` (quantity vs alpha, error bars at two sigma).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from pottscolor.experiments import C_D, TRAINING_C_RANGE

KINDS = ("scaling", "fitparams", "noise")
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 20, "top": 30, "bottom": 50}


@dataclass
class Series:
    label: str
    x: list
    y: list
    err: list | None = None  # one standard deviation


@dataclass
class Axis:
    lo: float
    hi: float
    px_lo: float
    px_hi: float
    log: bool = False

    def to_px(self, v):
        v = np.asarray(v, dtype=np.float64)
        if self.log:
            a, b, v = math.log10(self.lo), math.log10(self.hi), np.log10(v)
        else:
            a, b = self.lo, self.hi
        span = (b - a) or 1.0
        return self.px_lo + (v - a) / span * (self.px_hi - self.px_lo)

    def ticks(self):
        if self.log:
            lo, hi = math.floor(math.log10(self.lo)), math.ceil(math.log10(self.hi))
            return [10.0 ** k for k in range(lo, hi + 1) if self.lo <= 10.0 ** k <= self.hi]
        return list(np.linspace(self.lo, self.hi, 6))


@dataclass
class Annotations:
    vlines: list = field(default_factory=list)   # (x, label)
    band: tuple | None = None                    # (x0, x1, label)


def _bounds(values, log):
    v = np.asarray([x for x in values if np.isfinite(x) and (x > 0 or not log)], dtype=np.float64)
    if v.size == 0:
        return (1.0, 10.0) if log else (0.0, 1.0)
    lo, hi = float(v.min()), float(v.max())
    if log:
        if lo == hi:
            lo, hi = lo / 2, hi * 2
        return lo, hi
    pad = 0.05 * (hi - lo) if hi > lo else max(abs(lo) * 0.1, 1e-3)
    return lo - pad, hi + pad


def layout(series, kind, annotations=None):
    """Axes for a plot: returns ``(xaxis, yaxis, err_scale)``."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    err_scale = 2.0 if kind == "noise" else 1.0
    xs = [x for s in series for x in s.x]
    if annotations is not None:
        xs += [v for v, _ in annotations.vlines]
        if annotations.band:
            xs += list(annotations.band[:2])
    ys = []
    for s in series:
        e = s.err if s.err is not None else [0.0] * len(s.y)
        ys += [y - err_scale * d for y, d in zip(s.y, e)] + [y + err_scale * d for y, d in zip(s.y, e)]
    log_x = kind == "scaling"
    x0, x1 = _bounds(xs, log_x)
    y0, y1 = _bounds(ys, False)
    xaxis = Axis(x0, x1, MARGIN["left"], WIDTH - MARGIN["right"], log_x)
    yaxis = Axis(y0, y1, HEIGHT - MARGIN["bottom"], MARGIN["top"])
    return xaxis, yaxis, err_scale


def render(series, kind, title="", xlabel=None, ylabel=None, annotations=None) -> str:
    if not series:
        raise ValueError("nothing to plot")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if kind == "fitparams" and annotations is None:
        annotations = Annotations([(C_D, "c_d")], (*TRAINING_C_RANGE, "training range"))
    xlabel = xlabel or {"scaling": "iterations", "fitparams": "connectivity c", "noise": "alpha"}[kind]
    ylabel = ylabel or {"scaling": "conflict fraction", "fitparams": "value", "noise": "value"}[kind]
    xa, ya, k = layout(series, kind, annotations)
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    if annotations is not None:
        if annotations.band:
            b0, b1 = float(xa.to_px(annotations.band[0])), float(xa.to_px(annotations.band[1]))
            out.append(f'<rect class="band" x="{b0:.3f}" y="{top}" width="{b1 - b0:.3f}" '
                       f'height="{bottom - top}" fill="#cccccc" fill-opacity="0.35"/>')
            out.append(f'<text x="{(b0 + b1) / 2:.3f}" y="{top + 12}" text-anchor="middle" '
                       f'fill="#555">{escape(annotations.band[2])}</text>')
        for v, label in annotations.vlines:
            px = float(xa.to_px(v))
            out.append(f'<line class="vline" x1="{px:.3f}" y1="{top}" x2="{px:.3f}" y2="{bottom}" '
                       f'stroke="#444" stroke-dasharray="4,3"/>')
            out.append(f'<text x="{px + 3:.3f}" y="{top + 26}" fill="#444">{escape(label)}</text>')
    # axes
    left, right = MARGIN["left"], WIDTH - MARGIN["right"]
    out.append(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>')
    for t in xa.ticks():
        px = float(xa.to_px(t))
        out.append(f'<line x1="{px:.3f}" y1="{bottom}" x2="{px:.3f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.3f}" y="{bottom + 18}" text-anchor="middle">{t:g}</text>')
    for t in ya.ticks():
        py = float(ya.to_px(t))
        out.append(f'<line x1="{left - 5}" y1="{py:.3f}" x2="{left}" y2="{py:.3f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.3f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{(left + right) / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16,{(top + bottom) / 2}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    # data
    for idx, s in enumerate(series):
        col = PALETTE[idx % len(PALETTE)]
        px = xa.to_px(s.x)
        py = ya.to_px(s.y)
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
        out.append(f'<polyline class="series" fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        errs = s.err if s.err is not None else [None] * len(s.y)
        for xv, yv, a, b, e in zip(s.x, s.y, px, py, errs):
            if e is not None and e > 0:
                lo, hi = float(ya.to_px(yv - k * e)), float(ya.to_px(yv + k * e))
                out.append(f'<line class="errbar" x1="{a:.3f}" y1="{lo:.3f}" x2="{a:.3f}" y2="{hi:.3f}" '
                           f'stroke="{col}"/>')
            out.append(f'<circle cx="{a:.3f}" cy="{b:.3f}" r="2.5" fill="{col}"/>')
        ly = top + 16 * idx + 10
        out.append(f'<line x1="{right - 130}" y1="{ly}" x2="{right - 110}" y2="{ly}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{right - 105}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot(series, kind, path, **kwargs) -> Path:
    path = Path(path)
    path.write_text(render(series, kind, **kwargs), encoding="utf-8")
    return path
