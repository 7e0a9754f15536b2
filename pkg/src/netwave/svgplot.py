"""Minimal deterministic SVG plotting: line and scatter charts.

Self-contained output (inline styling, no external assets) with fixed
geometry and fixed number formatting, so identical data yields byte-identical
files.
"""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 16, 30, 44
COLORS = ("#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b7950b")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5):
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / n))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= n:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * span:
        out.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return out or [lo]


def _finite(vals):
    return [v for v in vals if math.isfinite(v)]


class _Frame:
    """Maps data coordinates to the fixed pixel viewport."""

    def __init__(self, xlo, xhi, ylo, yhi):
        if xhi <= xlo:
            xhi = xlo + 1.0
        if yhi <= ylo:
            yhi = ylo + 1.0
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi

    def px(self, x):
        t = (x - self.xlo) / (self.xhi - self.xlo)
        return MARGIN_L + t * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y):
        t = (y - self.ylo) / (self.yhi - self.ylo)
        return HEIGHT - MARGIN_B - t * (HEIGHT - MARGIN_T - MARGIN_B)


def _frame_svg(frame, title, xlabel, ylabel, ylog):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" '
        f'width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" '
        f'stroke="#444444" stroke-width="1"/>',
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 8}" text-anchor="middle" '
        f'font-family="monospace" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{HEIGHT // 2}" text-anchor="middle" '
        f'font-family="monospace" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT // 2})">{ylabel}</text>',
    ]
    for t in _ticks(frame.xlo, frame.xhi):
        x = frame.px(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{HEIGHT - MARGIN_B}" x2="{_fmt(x)}" '
            f'y2="{HEIGHT - MARGIN_B + 4}" stroke="#444444"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_B + 16}" '
            f'text-anchor="middle" font-family="monospace" '
            f'font-size="10">{t:.6g}</text>'
        )
    for t in _ticks(frame.ylo, frame.yhi):
        y = frame.py(t)
        label = f"1e{t:.3g}" if ylog else f"{t:.6g}"
        parts.append(
            f'<line x1="{MARGIN_L - 4}" y1="{_fmt(y)}" x2="{MARGIN_L}" '
            f'y2="{_fmt(y)}" stroke="#444444"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{_fmt(y + 3)}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{label}</text>'
        )
    return parts


def line_plot(x, series, labels=None, title="", xlabel="", ylabel="",
              logy=False) -> str:
    """Polyline chart of one or more series over a shared abscissa.

    With logy the base-10 logarithm is plotted and nonpositive values are
    dropped; axis labels then show the exponent.
    """
    series = [list(s) for s in series]
    x = list(x)
    ys = []
    for s in series:
        if logy:
            ys.append([math.log10(v) if v > 0 else math.nan for v in s])
        else:
            ys.append(list(s))
    flat = _finite([v for s in ys for v in s])
    if not flat:
        flat = [0.0, 1.0]
    frame = _Frame(min(x), max(x), min(flat), max(flat))
    parts = _frame_svg(frame, title, xlabel, ylabel, logy)
    for i, s in enumerate(ys):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(
            f"{_fmt(frame.px(xx))},{_fmt(frame.py(yy))}"
            for xx, yy in zip(x, s)
            if math.isfinite(yy)
        )
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        if labels:
            parts.append(
                f'<text x="{WIDTH - MARGIN_R - 4}" y="{MARGIN_T + 14 + 14 * i}" '
                f'text-anchor="end" font-family="monospace" font-size="11" '
                f'fill="{color}">{labels[i]}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_plot(x, y, title="", xlabel="", ylabel="") -> str:
    """Scatter chart of one point set."""
    x, y = list(x), list(y)
    fx, fy = _finite(x) or [0.0, 1.0], _finite(y) or [0.0, 1.0]
    frame = _Frame(min(fx), max(fx), min(fy), max(fy))
    parts = _frame_svg(frame, title, xlabel, ylabel, False)
    for xx, yy in zip(x, y):
        if math.isfinite(xx) and math.isfinite(yy):
            parts.append(
                f'<circle cx="{_fmt(frame.px(xx))}" cy="{_fmt(frame.py(yy))}" '
                f'r="3" fill="#1b6ca8"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
