"""Tiny deterministic SVG chart emitter (no timestamps, fixed formatting)."""

from __future__ import annotations

from typing import Sequence

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 40, 60
_PALETTE = ("#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _frame(title: str, body: list[str]) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def bar_chart(labels: Sequence[str], values: Sequence[float], title: str, y_label: str = "") -> str:
    if len(labels) != len(values) or not labels:
        raise ValueError("labels and values must be equal-length and non-empty")
    top = max(max(values), 1e-12)
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB
    n = len(values)
    slot = plot_w / n
    body = [f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>']
    body.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    if y_label:
        body.append(
            f'<text x="16" y="{_MT + plot_h / 2:.1f}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {_MT + plot_h / 2:.1f})">{y_label}</text>'
        )
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * value / top
        x = _ML + i * slot + slot * 0.15
        y = _H - _MB - h
        body.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{slot * 0.7:.1f}" height="{h:.1f}" fill="{_PALETTE[0]}"/>'
        )
        body.append(
            f'<text x="{_ML + (i + 0.5) * slot:.1f}" y="{_H - _MB + 18}" text-anchor="middle" font-size="12">{label}</text>'
        )
        body.append(
            f'<text x="{_ML + (i + 0.5) * slot:.1f}" y="{y - 6:.1f}" text-anchor="middle" font-size="11">{_fmt(value)}</text>'
        )
    return _frame(title, body)


def line_chart(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    title: str,
    x_label: str = "",
    y_label: str = "",
) -> str:
    if not series or any(not pts for _, pts in series):
        raise ValueError("every series needs at least one point")
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    plot_w = _W - _ML - _MR
    plot_h = _H - _MT - _MB

    def sx(x: float) -> float:
        return _ML + plot_w * (x - x0) / (x1 - x0)

    def sy(y: float) -> float:
        return _H - _MB - plot_h * (y - y0) / (y1 - y0)

    body = [
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
        f'<text x="{_ML}" y="{_H - _MB + 18}" font-size="11">{_fmt(x0)}</text>',
        f'<text x="{_W - _MR}" y="{_H - _MB + 18}" text-anchor="end" font-size="11">{_fmt(x1)}</text>',
        f'<text x="{_ML - 6}" y="{_H - _MB}" text-anchor="end" font-size="11">{_fmt(y0)}</text>',
        f'<text x="{_ML - 6}" y="{_MT + 10}" text-anchor="end" font-size="11">{_fmt(y1)}</text>',
    ]
    if x_label:
        body.append(f'<text x="{_ML + plot_w / 2:.1f}" y="{_H - 16}" text-anchor="middle" font-size="12">{x_label}</text>')
    if y_label:
        body.append(
            f'<text x="16" y="{_MT + plot_h / 2:.1f}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {_MT + plot_h / 2:.1f})">{y_label}</text>'
        )
    for si, (name, pts) in enumerate(series):
        color = _PALETTE[si % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        body.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        body.append(
            f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 16 * si}" text-anchor="end" font-size="12" fill="{color}">{name}</text>'
        )
    return _frame(title, body)
