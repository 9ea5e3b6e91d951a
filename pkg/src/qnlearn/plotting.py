"""Minimal self-contained SVG line charts (log-scale y), no plotting deps."""
from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 40


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def svg_line_chart(series: dict, title: str = "", xlabel: str = "k",
                   ylabel: str = "value", log_y: bool = True,
                   width: int = 720, height: int = 440) -> str:
    """Render named series of (x, y) pairs as an SVG polyline chart.

    With `log_y`, non-positive y values are dropped from display (they
    cannot appear on a log axis).
    """
    cleaned = {}
    for name, pts in series.items():
        keep = [(float(x), float(y)) for x, y in pts
                if math.isfinite(x) and math.isfinite(y)
                and (not log_y or y > 0.0)]
        if keep:
            cleaned[name] = keep
    if not cleaned:
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                f'height="{height}"><text x="20" y="40">no drawable data'
                f'</text></svg>')

    xs = [x for pts in cleaned.values() for x, _ in pts]
    ys = [y for pts in cleaned.values() for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    if log_y:
        y_lo, y_hi = math.log10(min(ys)), math.log10(max(ys))
    else:
        y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(x):
        return _MARGIN_L + plot_w * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        v = math.log10(y) if log_y else y
        return _MARGIN_T + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.0f}" y="16" text-anchor="middle" '
        f'font-size="14">{_esc(title)}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle">'
        f'{_esc(xlabel)}</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{_esc(ylabel)}</text>',
    ]

    # y ticks: decades when log, five linear ticks otherwise
    if log_y:
        decades = range(math.ceil(y_lo), math.floor(y_hi) + 1)
        tick_vals = [(10.0 ** d, f"1e{d}") for d in decades]
    else:
        levels = [y_lo + i * (y_hi - y_lo) / 4.0 for i in range(5)]
        tick_vals = [(v, f"{v:.3g}") for v in levels]
    for val, label in tick_vals:
        yy = py(val)
        parts.append(
            f'<line x1="{_MARGIN_L - 4}" y1="{yy:.1f}" x2="{_MARGIN_L}" '
            f'y2="{yy:.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{yy + 4:.1f}" '
            f'text-anchor="end">{label}</text>'
        )
    for i in range(5):
        xv = x_lo + i * (x_hi - x_lo) / 4.0
        xx = px(xv)
        parts.append(
            f'<line x1="{xx:.1f}" y1="{_MARGIN_T + plot_h}" x2="{xx:.1f}" '
            f'y2="{_MARGIN_T + plot_h + 4}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{xx:.1f}" y="{_MARGIN_T + plot_h + 16}" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )

    for i, (name, pts) in enumerate(cleaned.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>'
        )
        ly = _MARGIN_T + 14 + 16 * i
        parts.append(
            f'<line x1="{width - 150}" y1="{ly - 4}" x2="{width - 130}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{width - 124}" y="{ly}">{_esc(name)}</text>')

    parts.append("</svg>")
    return "\n".join(parts)
