"""Accuracy-vs-SNR curves as standalone SVG (log SNR axis, shaded 99% band)."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

from .experiments import SweepResult

PALETTE = ("#1f77b4", "#000000", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 60


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def sweep_svg(results: Sequence[SweepResult], title: str = "") -> str:
    snrs = [p.snr for r in results for p in r.points]
    lo, hi = math.log10(min(snrs)), math.log10(max(snrs))
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(s):
        return LEFT + (math.log10(s) - lo) / (hi - lo) * pw

    def sy(a):
        return TOP + (1.0 - a) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT + pw / 2}" y="{TOP - 10}" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for dec in range(math.floor(lo), math.ceil(hi) + 1):
        for m in range(1, 10):
            s = m * 10.0**dec
            if not (lo - 1e-9 <= math.log10(s) <= hi + 1e-9):
                continue
            x = _fmt(sx(s))
            major = m == 1
            out.append(f'<line x1="{x}" y1="{TOP + ph}" x2="{x}" y2="{TOP + ph + (6 if major else 3)}" stroke="#444"/>')
            if major:
                out.append(f'<text x="{x}" y="{TOP + ph + 20}" text-anchor="middle">{s:g}</text>')
    for a in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        y = _fmt(sy(a))
        out.append(f'<line x1="{LEFT - 5}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="#444"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{a:.1f}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 15}" text-anchor="middle">SNR</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" transform="rotate(-90 18 {TOP + ph / 2})">accuracy</text>'
    )
    for k, r in enumerate(results):
        color = PALETTE[k % len(PALETTE)]
        upper = [(sx(p.snr), sy(p.mean + p.ci_half_width)) for p in r.points]
        lower = [(sx(p.snr), sy(p.mean - p.ci_half_width)) for p in reversed(r.points)]
        band = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in upper + lower)
        out.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(sx(p.snr))},{_fmt(sy(p.mean))}" for p in r.points)
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = TOP + 15 + 20 * k
        out.append(f'<line x1="{W - RIGHT + 15}" y1="{ly}" x2="{W - RIGHT + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT + 45}" y="{ly}" dominant-baseline="middle">{escape(r.label or f"curve {k}")}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
