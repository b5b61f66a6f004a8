"""Plot data as two-column text blocks and a dependency-free log-log SVG."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from pathlib import Path

Series = Mapping[str, tuple[Sequence[float], Sequence[float]]]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def text_blocks(series: Series) -> str:
    """One ``# name`` header per series followed by ``x y`` lines; blocks separated by a blank line."""
    out = []
    for name, (xs, ys) in series.items():
        out.append(f"# {name}")
        out += [f"{x:.12g} {y:.12g}" for x, y in zip(xs, ys)]
        out.append("")
    return "\n".join(out)


def _positive(series: Series):
    pts = {n: [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0] for n, (xs, ys) in series.items()}
    return {n: p for n, p in pts.items() if p}


def loglog_svg(series: Series, title: str = "", xlabel: str = "x", ylabel: str = "y",
               width: int = 480, height: int = 360) -> str:
    """Log-log line plot; non-positive points are skipped."""
    pts = _positive(series)
    if not pts:
        raise ValueError("nothing to plot: no positive points")
    lx = [math.log10(x) for p in pts.values() for x, _ in p]
    ly = [math.log10(y) for p in pts.values() for _, y in p]
    x0, x1 = math.floor(min(lx)), math.ceil(max(lx))
    y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    ml, mr, mt, mb = 60, 110, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def X(v):
        return ml + pw * (math.log10(v) - x0) / (x1 - x0)

    def Y(v):
        return mt + ph * (1 - (math.log10(v) - y0) / (y1 - y0))

    el = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
          f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for e in range(x0, x1 + 1):
        px = ml + pw * (e - x0) / (x1 - x0)
        el.append(f'<line x1="{px:.1f}" y1="{mt}" x2="{px:.1f}" y2="{mt + ph}" stroke="#ddd"/>')
        el.append(f'<text x="{px:.1f}" y="{mt + ph + 15}" text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1):
        py = mt + ph * (1 - (e - y0) / (y1 - y0))
        el.append(f'<line x1="{ml}" y1="{py:.1f}" x2="{ml + pw}" y2="{py:.1f}" stroke="#ddd"/>')
        el.append(f'<text x="{ml - 5}" y="{py + 4:.1f}" text-anchor="end">1e{e}</text>')
    for i, (name, p) in enumerate(pts.items()):
        c = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{X(x):.1f},{Y(y):.1f}" for x, y in sorted(p))
        el.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        el += [f'<circle cx="{X(x):.1f}" cy="{Y(y):.1f}" r="2.5" fill="{c}"/>' for x, y in p]
        el.append(f'<text x="{ml + pw + 8}" y="{mt + 14 * (i + 1)}" fill="{c}">{_esc(name)}</text>')
    el.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{_esc(xlabel)}</text>')
    el.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {mt + ph / 2})">{_esc(ylabel)}</text>')
    if title:
        el.append(f'<text x="{ml + pw / 2}" y="18" text-anchor="middle">{_esc(title)}</text>')
    el.append("</svg>")
    return "\n".join(el) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_plot(series: Series, out_dir, stem: str, *, svg: bool = False, **labels) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.dat"]
    paths[0].write_text(text_blocks(series))
    if svg:
        paths.append(out / f"{stem}.svg")
        paths[1].write_text(loglog_svg(series, **labels))
    return paths
