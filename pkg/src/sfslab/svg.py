"""Minimal SVG 1.1 line plots written as plain text (no plotting dependency)."""

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "Panel", "nice_ticks", "render"]

_COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400")
_PANEL_W, _PANEL_H = 420, 300
_MARGIN = dict(left=70, right=20, top=36, bottom=50)


@dataclass(frozen=True)
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str


@dataclass(frozen=True)
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: tuple


def nice_ticks(lo, hi, target=5):
    """Round tick positions covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return [0.0, 1.0]
    if hi <= lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.floor(lo / step + 1e-9) * step
    last = math.ceil(hi / step - 1e-9) * step
    n = int(round((last - first) / step))
    return [first + k * step for k in range(n + 1)]


def _fmt(v):
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != 0 else "0"


def _tick_label(v):
    return f"{v:.4g}"


def _panel(p, x0, y0):
    w = _PANEL_W - _MARGIN["left"] - _MARGIN["right"]
    h = _PANEL_H - _MARGIN["top"] - _MARGIN["bottom"]
    xs = np.concatenate([np.asarray(s.x, float) for s in p.series])
    ys = np.concatenate([np.asarray(s.y, float) for s in p.series])
    xt = nice_ticks(float(np.nanmin(xs)), float(np.nanmax(xs)))
    yt = nice_ticks(float(np.nanmin(ys)), float(np.nanmax(ys)))
    left, top = x0 + _MARGIN["left"], y0 + _MARGIN["top"]

    def sx(v):
        return left + (v - xt[0]) / (xt[-1] - xt[0]) * w

    def sy(v):
        return top + h - (v - yt[0]) / (yt[-1] - yt[0]) * h

    out = [f'<text x="{_fmt(left + w / 2)}" y="{_fmt(y0 + 22)}" text-anchor="middle" '
           f'font-size="14">{escape(p.title)}</text>',
           f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(w)}" height="{_fmt(h)}" '
           'fill="none" stroke="#000"/>']
    for v in xt:
        X = _fmt(sx(v))
        out.append(f'<line x1="{X}" y1="{_fmt(top + h)}" x2="{X}" y2="{_fmt(top + h + 5)}" stroke="#000"/>')
        out.append(f'<text x="{X}" y="{_fmt(top + h + 18)}" text-anchor="middle" '
                   f'font-size="11">{_tick_label(v)}</text>')
    for v in yt:
        Y = _fmt(sy(v))
        out.append(f'<line x1="{_fmt(left - 5)}" y1="{Y}" x2="{_fmt(left)}" y2="{Y}" stroke="#000"/>')
        out.append(f'<text x="{_fmt(left - 8)}" y="{_fmt(sy(v) + 4)}" text-anchor="end" '
                   f'font-size="11">{_tick_label(v)}</text>')
    out.append(f'<text x="{_fmt(left + w / 2)}" y="{_fmt(top + h + 38)}" text-anchor="middle" '
               f'font-size="12">{escape(p.xlabel)}</text>')
    cy = top + h / 2
    out.append(f'<text x="{_fmt(x0 + 16)}" y="{_fmt(cy)}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 {_fmt(x0 + 16)} {_fmt(cy)})">{escape(p.ylabel)}</text>')
    for i, s in enumerate(p.series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(s.x, s.y)
                       if math.isfinite(a) and math.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 + 14 * i
        out.append(f'<line x1="{_fmt(left + w - 90)}" y1="{_fmt(ly)}" x2="{_fmt(left + w - 72)}" '
                   f'y2="{_fmt(ly)}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_fmt(left + w - 68)}" y="{_fmt(ly + 4)}" font-size="11">'
                   f'{escape(s.label)}</text>')
    return out


def render(panels, path=None):
    """Lay panels out side by side and return (optionally write) the SVG text."""
    width, height = _PANEL_W * len(panels), _PANEL_H
    parts = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">',
             f'<rect width="{width}" height="{height}" fill="#fff"/>']
    for i, p in enumerate(panels):
        parts += _panel(p, i * _PANEL_W, 0)
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text
