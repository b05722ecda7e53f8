"""Minimal self-contained SVG emitters (line charts and heat maps).

The CSV files are the authoritative artifacts; these plots are a convenience
rendering with no external plotting dependency.
"""

from __future__ import annotations

import math

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / max(n - 1, 1)
    return [lo + i * step for i in range(n)]


def line_plot(series: dict[str, list[tuple[float, float]]], title: str,
              xlabel: str, ylabel: str, log_y: bool = False) -> str:
    """Render named (x, y) series as polylines; log_y drops non-positive y."""
    pts_all = []
    for name, pts in series.items():
        for x, y in pts:
            if not log_y or y > 0:
                pts_all.append((x, math.log10(y) if log_y else y))
    if not pts_all:
        pts_all = [(0.0, 0.0), (1.0, 1.0)]
    xs = [p[0] for p in pts_all]
    ys = [p[1] for p in pts_all]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - x0) / (x1 - x0) * pw

    def py(y):
        return _MT + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>']
    for tx in _ticks(x0, x1):
        out.append(f'<line x1="{px(tx):.1f}" y1="{_MT + ph}" x2="{px(tx):.1f}" '
                   f'y2="{_MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(tx):.1f}" y="{_MT + ph + 18}" text-anchor="middle">'
                   f'{tx:.4g}</text>')
    for ty in _ticks(y0, y1):
        label = f'1e{ty:.2g}' if log_y else f'{ty:.4g}'
        out.append(f'<line x1="{_ML - 4}" y1="{py(ty):.1f}" x2="{_ML}" '
                   f'y2="{py(ty):.1f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{py(ty) + 4:.1f}" text-anchor="end">{label}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    out.append(f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{_MT + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_MT + ph / 2})">{_esc(ylabel)}</text>')
    for i, (name, pts) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        drawable = [(x, math.log10(y) if log_y else y) for x, y in pts
                    if not log_y or y > 0]
        if not drawable:
            continue
        path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in drawable)
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in drawable:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{_ML + 8}" y="{_MT + 16 + 16 * i}" fill="{color}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def _heat_color(v: float) -> str:
    """0 -> dark blue, 1 -> bright yellow (viridis-ish two-stop ramp)."""
    v = min(max(v, 0.0), 1.0)
    r = int(68 + v * (253 - 68))
    g = int(1 + v * (231 - 1))
    b = int(84 + v * (37 - 84))
    return f"rgb({r},{g},{b})"


def heat_map(xs: list[float], ys: list[float], values: dict, title: str,
             xlabel: str, ylabel: str) -> str:
    """Grid heat map; values maps (x, y) -> float in [0, 1] or None (black)."""
    pw, ph = _W - _ML - _MR, _H - _MT - _MB
    cw, ch = pw / max(len(xs), 1), ph / max(len(ys), 1)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>']
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            v = values.get((x, y))
            color = "black" if v is None else _heat_color(v)
            cx = _ML + i * cw
            cy = _MT + ph - (j + 1) * ch
            out.append(f'<rect x="{cx:.1f}" y="{cy:.1f}" width="{cw + 0.5:.1f}" '
                       f'height="{ch + 0.5:.1f}" fill="{color}"/>')
    for i, x in enumerate(xs):
        out.append(f'<text x="{_ML + (i + 0.5) * cw:.1f}" y="{_MT + ph + 16}" '
                   f'text-anchor="middle">{x:.3g}</text>')
    for j, y in enumerate(ys):
        out.append(f'<text x="{_ML - 6}" y="{_MT + ph - (j + 0.5) * ch + 4:.1f}" '
                   f'text-anchor="end">{y:.3g}</text>')
    out.append(f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{_MT + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_MT + ph / 2})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out)
