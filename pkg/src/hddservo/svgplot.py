"""Minimal self-contained SVG line plots of trace columns."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .servo import SimulationTrace

WIDTH, HEIGHT = 800, 450
MARGIN = dict(left=80, right=150, top=40, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
MAX_POINTS = 4000

KINDS = {
    "head_position": ("Head position", "position y (μm)"),
    "theta_convergence": ("Identified parameters", "parameter value"),
    "d_vs_dhat": ("Disturbance vs. prediction", "disturbance (μm)"),
}


def nice_ticks(lo: float, hi: float, target: int = 6) -> list:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _series(trace: SimulationTrace, kind: str):
    if kind == "head_position":
        return [("y", trace["y"])]
    if kind == "d_vs_dhat":
        return [("d", trace["d"]), ("d_hat", trace["d_hat"])]
    if kind == "theta_convergence":
        return [(f"theta_{i + 1}", trace.theta[:, i]) for i in range(trace.n_params)]
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(KINDS)}")


def _decimate(t, y):
    if len(t) <= MAX_POINTS:
        return t, y
    idx = np.linspace(0, len(t) - 1, MAX_POINTS).astype(int)
    return t[idx], y[idx]


def render(trace: SimulationTrace, kind: str, title: str | None = None) -> str:
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    series = _series(trace, kind)
    default_title, ylabel = KINDS[kind]
    title = title or default_title
    t = trace["t"]

    finite = np.concatenate([s[np.isfinite(s)] for _, s in series] + [np.zeros(0)])
    ylo, yhi = (float(finite.min()), float(finite.max())) if finite.size else (-1.0, 1.0)
    if yhi - ylo < 1e-300:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    tlo, thi = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0

    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def px(v):
        return x0 + (v - tlo) / (thi - tlo) * (x1 - x0)

    def py(v):
        return y0 - (v - ylo) / (yhi - ylo) * (y0 - y1)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{(x0 + x1) / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>',
    ]
    for v in nice_ticks(tlo, thi):
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{y0}" x2="{x:.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<line x1="{x:.2f}" y1="{y1}" x2="{x:.2f}" y2="{y0}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{y0 + 18}" text-anchor="middle">{v:g}</text>')
    for v in nice_ticks(ylo, yhi):
        y = py(v)
        out.append(f'<line x1="{x0 - 5}" y1="{y:.2f}" x2="{x0}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{x0}" y1="{y:.2f}" x2="{x1}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{x0 - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle">time t (s)</text>')
    out.append(
        f'<text x="20" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>'
    )

    for i, (label, values) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        tt, vv = _decimate(t, values)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tt, vv) if math.isfinite(b))
        out.append(f'<polyline class="series" data-label="{escape(label)}" fill="none" '
                   f'stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = y1 + 16 + 18 * i
        out.append(f'<line x1="{x1 + 12}" y1="{ly - 4}" x2="{x1 + 36}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 42}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>\n")
    return "\n".join(out)


def emit_plot(trace: SimulationTrace, path, kind: str = "head_position", title: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(trace, kind, title), encoding="utf-8")
    return path
