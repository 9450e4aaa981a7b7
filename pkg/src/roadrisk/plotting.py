"""Minimal deterministic SVG line charts for ROC and threshold-sweep curves."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

_WIDTH, _HEIGHT = 640, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 24, 40, 56
_PALETTE = ("#1f6fb2", "#c0392b", "#1e8449", "#8e44ad", "#b7950b")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def svg_line_chart(path, series: Sequence[tuple[str, Sequence[tuple[float, float | None]]]], *,
                   title: str, x_label: str, y_label: str,
                   x_range: tuple[float, float] = (0.0, 1.0),
                   y_range: tuple[float, float] = (0.0, 1.0),
                   diagonal: bool = False) -> Path:
    """One chart, several named polylines; None y-values break the line."""
    x0, x1 = x_range
    y0, y1 = y_range
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x0) / (x1 - x0) * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (y1 - y) / (y1 - y0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="13">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    # axes frame and quarter gridlines with tick labels
    for i in range(5):
        gx = x0 + (x1 - x0) * i / 4
        gy = y0 + (y1 - y0) * i / 4
        parts.append(f'<line x1="{px(gx):.1f}" y1="{py(y0):.1f}" x2="{px(gx):.1f}" '
                     f'y2="{py(y1):.1f}" stroke="#dddddd"/>')
        parts.append(f'<line x1="{px(x0):.1f}" y1="{py(gy):.1f}" x2="{px(x1):.1f}" '
                     f'y2="{py(gy):.1f}" stroke="#dddddd"/>')
        parts.append(f'<text x="{px(gx):.1f}" y="{py(y0) + 18:.1f}" '
                     f'text-anchor="middle">{_fmt(gx)}</text>')
        parts.append(f'<text x="{px(x0) - 8:.1f}" y="{py(gy) + 4:.1f}" '
                     f'text-anchor="end">{_fmt(gy)}</text>')
    parts.append(f'<rect x="{px(x0):.1f}" y="{py(y1):.1f}" width="{plot_w}" height="{plot_h}" '
                 f'fill="none" stroke="#444444"/>')
    if diagonal:
        parts.append(f'<line x1="{px(x0):.1f}" y1="{py(y0):.1f}" x2="{px(x1):.1f}" '
                     f'y2="{py(y1):.1f}" stroke="#999999" stroke-dasharray="5,4"/>')
    parts.append(f'<text x="{_WIDTH / 2:.1f}" y="{_HEIGHT - 14}" '
                 f'text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="18" y="{_HEIGHT / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_HEIGHT / 2:.1f})">{y_label}</text>')

    for s, (name, points) in enumerate(series):
        color = _PALETTE[s % len(_PALETTE)]
        runs: list[list[str]] = [[]]
        for x, y in points:
            if y is None:
                if runs[-1]:
                    runs.append([])
                continue
            runs[-1].append(f"{px(x):.2f},{py(y):.2f}")
        for run in runs:
            if len(run) >= 2:
                parts.append(f'<polyline points="{" ".join(run)}" fill="none" '
                             f'stroke="{color}" stroke-width="2"/>')
            elif len(run) == 1:
                cx, cy = run[0].split(",")
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>')
        ly = _MARGIN_T + 16 + 18 * s
        parts.append(f'<line x1="{_WIDTH - _MARGIN_R - 150}" y1="{ly - 4}" '
                     f'x2="{_WIDTH - _MARGIN_R - 126}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_WIDTH - _MARGIN_R - 120}" y="{ly}">{name}</text>')

    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
