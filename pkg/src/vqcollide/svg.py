"""Minimal SVG writers: line plots and log-scaled grid heatmaps.

Output is a pure function of the inputs (fixed number formatting, no
timestamps), so repeated runs produce identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=80, right=30, top=40, bottom=60)
COLORS = ("#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e")
DASHES = ("", "6,4", "2,3", "8,3,2,3")

# viridis anchor points, interpolated linearly
_CMAP = np.array([
    [68, 1, 84], [72, 40, 120], [62, 74, 137], [49, 104, 142], [38, 130, 142],
    [31, 158, 137], [53, 183, 121], [109, 205, 89], [180, 222, 44], [253, 231, 37],
], dtype=float)


def _n(x):
    return f"{x:.2f}"


def colormap(u):
    """RGB hex for u in [0, 1]."""
    u = min(max(float(u), 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(u), len(_CMAP) - 2)
    c = _CMAP[i] + (u - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#" + "".join(f"{int(round(v)):02x}" for v in c)


class _Axis:
    def __init__(self, lo, hi, log, p0, p1):
        if log:
            if lo <= 0:
                raise ValueError("log axis needs positive data")
            lo, hi = math.log10(lo), math.log10(hi)
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.log, self.p0, self.p1 = lo, hi, log, p0, p1

    def __call__(self, v):
        v = math.log10(v) if self.log else v
        return self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)

    def ticks(self):
        if self.log:
            return [10.0**k for k in range(math.ceil(self.lo - 1e-9), math.floor(self.hi + 1e-9) + 1)]
        step = 10 ** math.floor(math.log10((self.hi - self.lo) / 5))
        for m in (1, 2, 5, 10):
            if (self.hi - self.lo) / (m * step) <= 6:
                step *= m
                break
        first = math.ceil(self.lo / step - 1e-9) * step
        return [first + k * step for k in range(int((self.hi - first) / step + 1e-9) + 1)]


def _tick_label(v, log):
    if log:
        return f"1e{int(round(math.log10(v)))}"
    return f"{v:.4g}"


def _frame(title, xlabel, ylabel):
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{(MARGIN["left"] + WIDTH - MARGIN["right"]) / 2}" y="{HEIGHT - 15}" '
           f'text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="18" y="{(MARGIN["top"] + HEIGHT - MARGIN["bottom"]) / 2}" text-anchor="middle" '
           f'transform="rotate(-90 18 {(MARGIN["top"] + HEIGHT - MARGIN["bottom"]) / 2})">'
           f'{escape(ylabel)}</text>']
    return out


def _axes(out, ax, ay):
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
               'fill="none" stroke="black"/>')
    for v in ax.ticks():
        px = ax(v)
        if x0 - 1e-6 <= px <= x1 + 1e-6:
            out.append(f'<line x1="{_n(px)}" y1="{y0}" x2="{_n(px)}" y2="{y0 + 5}" stroke="black"/>')
            out.append(f'<text x="{_n(px)}" y="{y0 + 18}" text-anchor="middle">'
                       f'{_tick_label(v, ax.log)}</text>')
    for v in ay.ticks():
        py = ay(v)
        if y1 - 1e-6 <= py <= y0 + 1e-6:
            out.append(f'<line x1="{x0 - 5}" y1="{_n(py)}" x2="{x0}" y2="{_n(py)}" stroke="black"/>')
            out.append(f'<text x="{x0 - 8}" y="{_n(py + 4)}" text-anchor="end">'
                       f'{_tick_label(v, ay.log)}</text>')


def line_plot(series, path, title="", xlabel="", ylabel="", logx=False, logy=False,
              markers=False):
    """``series`` is a list of (label, xs, ys); non-finite and (on log axes)
    non-positive points are skipped."""
    cleaned = []
    for label, xs, ys in series:
        xs, ys = np.asarray(xs, float), np.asarray(ys, float)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            ok &= xs > 0
        if logy:
            ok &= ys > 0
        cleaned.append((label, xs[ok], ys[ok]))
    allx = np.concatenate([c[1] for c in cleaned]) if cleaned else np.array([])
    ally = np.concatenate([c[2] for c in cleaned]) if cleaned else np.array([])
    if allx.size == 0:
        allx = np.array([1.0, 10.0])
        ally = np.array([1.0, 10.0])
    ax = _Axis(allx.min(), allx.max(), logx, MARGIN["left"], WIDTH - MARGIN["right"])
    ay = _Axis(ally.min(), ally.max(), logy, HEIGHT - MARGIN["bottom"], MARGIN["top"])
    out = _frame(title, xlabel, ylabel)
    _axes(out, ax, ay)
    for k, (label, xs, ys) in enumerate(cleaned):
        color = COLORS[k % len(COLORS)]
        dash = DASHES[k % len(DASHES)]
        pts = " ".join(f"{_n(ax(x))},{_n(ay(y))}" for x, y in zip(xs, ys))
        style = f' stroke-dasharray="{dash}"' if dash else ""
        if markers:
            for x, y in zip(xs, ys):
                out.append(f'<circle cx="{_n(ax(x))}" cy="{_n(ay(y))}" r="3" fill="{color}"/>')
        else:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"{style}/>')
        ly = MARGIN["top"] + 16 + 16 * k
        lx = WIDTH - MARGIN["right"] - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="1.5"{style}/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    _write(path, out)


def heatmap(grid, xs, ys, path, title="", xlabel="", ylabel="", vmin=None, vmax=None,
            colorbar_label="log10 value"):
    """Cells coloured by log10 of ``grid[iy, ix]``; values <= 0 are floored at vmin."""
    grid = np.asarray(grid, dtype=float)
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if grid.shape != (ys.size, xs.size):
        raise ValueError("grid shape must be (len(ys), len(xs))")
    pos = grid[np.isfinite(grid) & (grid > 0)]
    lo = math.log10(vmin) if vmin else (math.floor(math.log10(pos.min())) if pos.size else -16)
    hi = math.log10(vmax) if vmax else (math.ceil(math.log10(pos.max())) if pos.size else 0)
    if hi <= lo:
        hi = lo + 1
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"] - 70
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    cw, ch = (x1 - x0) / xs.size, (y0 - y1) / ys.size
    out = _frame(title, xlabel, ylabel)
    for iy in range(ys.size):
        for ix in range(xs.size):
            v = grid[iy, ix]
            if not np.isfinite(v):
                fill = "#bbbbbb"
            else:
                u = (math.log10(max(v, 10.0**lo)) - lo) / (hi - lo)
                fill = colormap(u)
            out.append(f'<rect x="{_n(x0 + ix * cw)}" y="{_n(y0 - (iy + 1) * ch)}" '
                       f'width="{_n(cw + 0.3)}" height="{_n(ch + 0.3)}" fill="{fill}"/>')
    out.append(f'<rect x="{x0}" y="{y1}" width="{_n(x1 - x0)}" height="{y0 - y1}" '
               'fill="none" stroke="black"/>')
    for ix in sorted({0, xs.size // 2, xs.size - 1}):
        px = x0 + (ix + 0.5) * cw
        out.append(f'<text x="{_n(px)}" y="{y0 + 18}" text-anchor="middle">{xs[ix]:.3g}</text>')
    for iy in sorted({0, ys.size // 2, ys.size - 1}):
        py = y0 - (iy + 0.5) * ch
        out.append(f'<text x="{x0 - 8}" y="{_n(py + 4)}" text-anchor="end">{ys[iy]:.3g}</text>')
    bx = x1 + 25
    nseg = 50
    for k in range(nseg):
        seg = (y0 - y1) / nseg
        out.append(f'<rect x="{bx}" y="{_n(y0 - (k + 1) * seg)}" width="15" height="{_n(seg + 0.3)}" '
                   f'fill="{colormap((k + 0.5) / nseg)}"/>')
    out.append(f'<text x="{bx + 20}" y="{y0}">{lo:g}</text>')
    out.append(f'<text x="{bx + 20}" y="{y1 + 10}">{hi:g}</text>')
    out.append(f'<text x="{bx + 8}" y="{y1 - 8}" text-anchor="middle">{escape(colorbar_label)}</text>')
    out.append("</svg>")
    _write(path, out)


def _write(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
