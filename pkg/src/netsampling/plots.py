"""Minimal deterministic SVG line charts."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
PANEL_W, PANEL_H = 320, 240
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 52, 12, 28, 40


@dataclass
class Panel:
    title: str
    series: dict[str, list[tuple[float, float]]]
    xlabel: str = "sampling proportion"
    ylabel: str = "relative mean error"
    extra: dict = field(default_factory=dict)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _panel_svg(panel: Panel, ox: float, oy: float) -> list[str]:
    pts = [p for s in panel.series.values() for p in s]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y1 = y0 + 1.0
    w = PANEL_W - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B

    def sx(x):
        return ox + MARGIN_L + (x - x0) / (x1 - x0) * w

    def sy(y):
        return oy + MARGIN_T + h - (y - y0) / (y1 - y0) * h

    out = [
        f'<text x="{_fmt(ox + PANEL_W / 2)}" y="{_fmt(oy + 16)}" text-anchor="middle" '
        f'font-size="12">{escape(panel.title)}</text>',
        f'<line x1="{_fmt(sx(x0))}" y1="{_fmt(sy(y0))}" x2="{_fmt(sx(x1))}" y2="{_fmt(sy(y0))}" stroke="black"/>',
        f'<line x1="{_fmt(sx(x0))}" y1="{_fmt(sy(y0))}" x2="{_fmt(sx(x0))}" y2="{_fmt(sy(y1))}" stroke="black"/>',
        f'<text x="{_fmt(ox + MARGIN_L + w / 2)}" y="{_fmt(oy + PANEL_H - 6)}" text-anchor="middle" '
        f'font-size="10">{escape(panel.xlabel)}</text>',
        f'<text x="{_fmt(ox + 12)}" y="{_fmt(oy + MARGIN_T + h / 2)}" text-anchor="middle" font-size="10" '
        f'transform="rotate(-90 {_fmt(ox + 12)} {_fmt(oy + MARGIN_T + h / 2)})">{escape(panel.ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(sy(y0) + 13)}" text-anchor="middle" '
                   f'font-size="9">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{_fmt(sx(x0) - 4)}" y="{_fmt(sy(t) + 3)}" text-anchor="end" '
                   f'font-size="9">{t:.3g}</text>')
    for i, (label, points) in enumerate(panel.series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in sorted(points))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = oy + MARGIN_T + 4 + 12 * i
        lx = ox + PANEL_W - MARGIN_R - 70
        out.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 14)}" y2="{_fmt(ly)}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{_fmt(lx + 18)}" y="{_fmt(ly + 3)}" font-size="9">{escape(label)}</text>')
    return out


def render_svg(panels: list[Panel], columns: int = 3) -> str:
    if not panels or any(not p.series or not any(p.series.values()) for p in panels):
        raise ValueError("cannot plot an empty series")
    columns = max(1, min(columns, len(panels)))
    rows = (len(panels) + columns - 1) // columns
    width, height = columns * PANEL_W, rows * PANEL_H
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for i, panel in enumerate(panels):
        parts.extend(_panel_svg(panel, (i % columns) * PANEL_W, (i // columns) * PANEL_H))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(panels: list[Panel], path: str | Path, columns: int = 3) -> Path:
    """Write ``panels`` as one SVG; raises ValueError (and writes nothing)
    if any series is empty."""
    svg = render_svg(panels, columns)
    path = Path(path)
    path.write_text(svg)
    return path
