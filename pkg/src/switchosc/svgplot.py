"""Minimal self-contained SVG line plots.

No plotting dependency: polylines, linear or log axes, fixed deterministic
formatting so identical data produces identical bytes.
"""

from __future__ import annotations

import math

from .core import DomainError

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

WIDTH, HEIGHT = 720, 460
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 28, 46


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    t0 = math.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-12 * abs(step):
        out.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return out


def line_plot(series, path: str | None = None, title: str = "",
              xlabel: str = "x", ylabel: str = "y",
              logx: bool = False, logy: bool = False) -> str:
    """Render series = [(label, xs, ys), ...] to an SVG string (and file).

    Log axes plot log10 of the data; non-positive values are rejected there.
    """
    if not series:
        raise DomainError("no series to plot")

    def tx(vals, log):
        if not log:
            return list(vals)
        out = []
        for v in vals:
            if v <= 0:
                raise DomainError("log axis requires positive data")
            out.append(math.log10(v))
        return out

    data = [(lab, tx(xs, logx), tx(ys, logy)) for lab, xs, ys in series]
    all_x = [v for _, xs, _ in data for v in xs]
    all_y = [v for _, _, ys in data for v in ys]
    x_lo, x_hi = min(all_x), max(all_x)
    y_lo, y_hi = min(all_y), max(all_y)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + pw * (v - x_lo) / (x_hi - x_lo)

    def py(v):
        return MARGIN_T + ph * (1.0 - (v - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH // 2}" y="18" font-size="13" text-anchor="middle" '
            f'font-family="sans-serif">{title}</text>')
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        lab = _fmt(t) if not logx else f"1e{_fmt(t)}"
        parts.append(f'<line x1="{_fmt(x)}" y1="{MARGIN_T + ph}" x2="{_fmt(x)}" '
                     f'y2="{MARGIN_T + ph + 4}" stroke="#444"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{MARGIN_T + ph + 17}" font-size="10" '
                     f'text-anchor="middle" font-family="sans-serif">{lab}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        lab = _fmt(t) if not logy else f"1e{_fmt(t)}"
        parts.append(f'<line x1="{MARGIN_L - 4}" y1="{_fmt(y)}" x2="{MARGIN_L}" '
                     f'y2="{_fmt(y)}" stroke="#444"/>')
        parts.append(f'<text x="{MARGIN_L - 7}" y="{_fmt(y + 3)}" font-size="10" '
                     f'text-anchor="end" font-family="sans-serif">{lab}</text>')
    parts.append(f'<text x="{MARGIN_L + pw // 2}" y="{HEIGHT - 8}" font-size="12" '
                 f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    parts.append(f'<text x="14" y="{MARGIN_T + ph // 2}" font-size="12" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'transform="rotate(-90 14 {MARGIN_T + ph // 2})">{ylabel}</text>')
    for i, (label, xs, ys) in enumerate(data):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(u))},{_fmt(py(v))}" for u, v in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     'stroke-width="1.2"/>')
        if label:
            yl = MARGIN_T + 14 + 14 * i
            parts.append(f'<line x1="{MARGIN_L + 8}" y1="{yl - 4}" '
                         f'x2="{MARGIN_L + 28}" y2="{yl - 4}" stroke="{color}" '
                         'stroke-width="1.2"/>')
            parts.append(f'<text x="{MARGIN_L + 32}" y="{yl}" font-size="10" '
                         f'font-family="sans-serif">{label}</text>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(svg)
    return svg
