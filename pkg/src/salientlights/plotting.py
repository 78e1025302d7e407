"""Minimal deterministic SVG line charts for metric curves.

Hand-rolled rather than matplotlib so identical input yields identical
bytes (no embedded ids, timestamps, or font metrics).
"""

from __future__ import annotations

from typing import Sequence

Series = tuple[str, Sequence[tuple[float, float]]]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_WIDTH, _HEIGHT = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def plot_svg(series: Sequence[Series], title: str = "",
             x_label: str = "", y_label: str = "") -> str:
    """Render labeled (x, y) series as an SVG line chart.

    Raises ValueError on an empty series list or an empty series.
    """
    if not series:
        raise ValueError("need at least one series")
    for label, pts in series:
        if not pts:
            raise ValueError(f"series {label!r} has no points")
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" '
                   f'font-size="16">{title}</text>')
    n_ticks = 5
    for i in range(n_ticks + 1):
        fx = x_lo + (x_hi - x_lo) * i / n_ticks
        fy = y_lo + (y_hi - y_lo) * i / n_ticks
        gx = px(fx)
        gy = py(fy)
        out.append(f'<line x1="{gx:.1f}" y1="{_MARGIN_T + plot_h}" '
                   f'x2="{gx:.1f}" y2="{_MARGIN_T + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{gx:.1f}" y="{_MARGIN_T + plot_h + 20}" '
                   f'text-anchor="middle" font-size="11">{_fmt(fx)}</text>')
        out.append(f'<line x1="{_MARGIN_L - 5}" y1="{gy:.1f}" '
                   f'x2="{_MARGIN_L}" y2="{gy:.1f}" stroke="black"/>')
        out.append(f'<text x="{_MARGIN_L - 8}" y="{gy + 4:.1f}" '
                   f'text-anchor="end" font-size="11">{_fmt(fy)}</text>')
    if x_label:
        out.append(f'<text x="{_MARGIN_L + plot_w / 2:.1f}" '
                   f'y="{_HEIGHT - 10}" text-anchor="middle" '
                   f'font-size="13">{x_label}</text>')
    if y_label:
        out.append(f'<text x="16" y="{_MARGIN_T + plot_h / 2:.1f}" '
                   f'text-anchor="middle" font-size="13" '
                   f'transform="rotate(-90 16 {_MARGIN_T + plot_h / 2:.1f})">'
                   f'{y_label}</text>')
    for k, (label, pts) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="2"/>')
        ly = _MARGIN_T + 14 + 18 * k
        lx = _MARGIN_L + plot_w - 150
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}" font-size="12">{label}</text>')
    out.append("</svg>")
    return "".join(line + "\n" for line in out)
