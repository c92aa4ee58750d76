"""Dependency-free SVG consumption/price profiles.

One bar per step for total consumption (MWh, left axis), a stepped
polyline for the price (currency/MWh, right axis), and an optional second
bar series for a reference schedule.  Output is deterministic text; the
tool version appears only in a comment line so rerun diffs stay clean.
"""

from __future__ import annotations

import numpy as np

from . import __version__

_W, _H = 720, 360
_MARGIN = 48


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def consumption_profile_svg(prices, consumption, reference=None,
                            title: str = "consumption vs price") -> str:
    """Bars for consumption (optionally paired with a reference) + price line."""
    prices = np.asarray(prices, dtype=float)
    cons = np.asarray(consumption, dtype=float)
    T = cons.shape[0]
    ref = None if reference is None else np.asarray(reference, dtype=float)

    plot_w = _W - 2 * _MARGIN
    plot_h = _H - 2 * _MARGIN
    cmax = max(cons.max() if T else 0.0,
               (ref.max() if ref is not None and ref.size else 0.0), 1e-12)
    pmin, pmax = float(prices.min()), float(prices.max())
    if pmax - pmin < 1e-12:
        pmin, pmax = pmin - 1.0, pmax + 1.0

    def bx(t):
        return _MARGIN + plot_w * t / T

    def by_c(v):
        return _H - _MARGIN - plot_h * v / cmax

    def by_p(v):
        return _H - _MARGIN - plot_h * (v - pmin) / (pmax - pmin)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- reservoir-flex {__version__} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<title>{title}</title>',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" '
        f'y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_H - _MARGIN}" stroke="black"/>',
    ]
    slot = plot_w / max(T, 1)
    bar_w = slot * (0.38 if ref is not None else 0.72)
    for t in range(T):
        x = bx(t) + slot * 0.14
        if ref is not None:
            parts.append(
                f'<rect class="reference" x="{_fmt(x)}" y="{_fmt(by_c(ref[t]))}" '
                f'width="{_fmt(bar_w)}" height="{_fmt(_H - _MARGIN - by_c(ref[t]))}" '
                f'fill="#bbbbbb"/>')
            x += bar_w
        parts.append(
            f'<rect class="consumption" x="{_fmt(x)}" y="{_fmt(by_c(cons[t]))}" '
            f'width="{_fmt(bar_w)}" height="{_fmt(_H - _MARGIN - by_c(cons[t]))}" '
            f'fill="#3465a4"/>')
    pts = []
    for t in range(T):
        y = _fmt(by_p(prices[t]))
        pts.append(f"{_fmt(bx(t))},{y}")
        pts.append(f"{_fmt(bx(t + 1))},{y}")
    parts.append(
        f'<polyline points="{" ".join(pts)}" fill="none" stroke="#cc0000" '
        f'stroke-width="1.5"/>')
    parts.append(
        f'<text x="{_MARGIN}" y="{_MARGIN - 12}" font-size="13" '
        f'font-family="sans-serif">{title}</text>')
    parts.append(
        f'<text x="{_MARGIN}" y="{_H - 10}" font-size="11" '
        f'font-family="sans-serif" fill="#3465a4">bars: consumption (MWh)'
        + (' / grey: reference' if ref is not None else '') + '</text>')
    parts.append(
        f'<text x="{_W - _MARGIN}" y="{_H - 10}" font-size="11" text-anchor="end" '
        f'font-family="sans-serif" fill="#cc0000">line: price ({_fmt(pmin)}..'
        f'{_fmt(pmax)} EUR/MWh)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
