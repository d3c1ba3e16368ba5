"""Minimal self-contained SVG line charts (no plotting dependencies).

Just enough for convergence figures: linear x axis, optional log y axis,
multiple labelled series with distinct colors and dash patterns, and a
legend. NaN values break the polyline so halted trials render as truncated
curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_PALETTE = ["#c0392b", "#2c3e50", "#2980b9", "#27ae60", "#8e44ad", "#d35400"]
_DASHES = ["", "8,4", "2,3", "8,4,2,4", "12,3", "1,3"]


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    log_y: bool = True


def _log_ticks(lo: float, hi: float) -> list[float]:
    first = math.floor(math.log10(lo))
    last = math.ceil(math.log10(hi))
    return [10.0**e for e in range(first, last + 1)]


def _linear_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * step:
        ticks.append(t)
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"1e{int(round(math.log10(abs(v))))}" if 10 ** round(math.log10(abs(v))) == abs(v) else f"{v:.1e}"
    return f"{v:g}"


def _panel_svg(panel: Panel, x0: float, y0: float, width: float, height: float) -> str:
    margin_l, margin_r, margin_t, margin_b = 62, 14, 30, 44
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b
    px0, py0 = x0 + margin_l, y0 + margin_t

    xs = [v for s in panel.series for v in s.x if not math.isnan(v)]
    ys = [v for s in panel.series for v in s.y
          if not math.isnan(v) and (not panel.log_y or v > 0)]
    if not xs or not ys:
        raise ValueError(f"panel {panel.title!r} has no drawable data")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if panel.log_y:
        if y_hi == y_lo:
            y_hi = y_lo * 10
        ly_lo, ly_hi = math.log10(y_lo), math.log10(y_hi)
        pad = 0.05 * (ly_hi - ly_lo) or 0.5
        ly_lo, ly_hi = ly_lo - pad, ly_hi + pad

        def y_pix(v):
            return py0 + plot_h * (1 - (math.log10(v) - ly_lo) / (ly_hi - ly_lo))

        y_ticks = [t for t in _log_ticks(y_lo, y_hi) if 10**ly_lo <= t <= 10**ly_hi]
    else:
        if y_hi == y_lo:
            y_hi = y_lo + 1
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

        def y_pix(v):
            return py0 + plot_h * (1 - (v - y_lo) / (y_hi - y_lo))

        y_ticks = _linear_ticks(y_lo, y_hi)

    def x_pix(v):
        return px0 + plot_w * (v - x_lo) / (x_hi - x_lo)

    parts = [
        f'<rect x="{px0:.1f}" y="{py0:.1f}" width="{plot_w:.1f}" height="{plot_h:.1f}"'
        ' fill="white" stroke="#444" stroke-width="1"/>',
        f'<text x="{x0 + width / 2:.1f}" y="{y0 + 18:.1f}" text-anchor="middle"'
        f' font-size="13" font-family="sans-serif">{panel.title}</text>',
        f'<text x="{px0 + plot_w / 2:.1f}" y="{y0 + height - 8:.1f}" text-anchor="middle"'
        f' font-size="12" font-family="sans-serif">{panel.xlabel}</text>',
        f'<text x="{x0 + 14:.1f}" y="{py0 + plot_h / 2:.1f}" text-anchor="middle"'
        f' font-size="12" font-family="sans-serif"'
        f' transform="rotate(-90 {x0 + 14:.1f} {py0 + plot_h / 2:.1f})">{panel.ylabel}</text>',
    ]
    for t in _linear_ticks(x_lo, x_hi):
        tx = x_pix(t)
        parts.append(f'<line x1="{tx:.1f}" y1="{py0 + plot_h:.1f}" x2="{tx:.1f}"'
                     f' y2="{py0 + plot_h + 4:.1f}" stroke="#444"/>')
        parts.append(f'<text x="{tx:.1f}" y="{py0 + plot_h + 16:.1f}" text-anchor="middle"'
                     f' font-size="10" font-family="sans-serif">{_fmt_tick(t)}</text>')
    for t in y_ticks:
        ty = y_pix(t)
        parts.append(f'<line x1="{px0 - 4:.1f}" y1="{ty:.1f}" x2="{px0:.1f}"'
                     f' y2="{ty:.1f}" stroke="#444"/>')
        parts.append(f'<line x1="{px0:.1f}" y1="{ty:.1f}" x2="{px0 + plot_w:.1f}"'
                     f' y2="{ty:.1f}" stroke="#ddd" stroke-width="0.6"/>')
        parts.append(f'<text x="{px0 - 7:.1f}" y="{ty + 3.5:.1f}" text-anchor="end"'
                     f' font-size="10" font-family="sans-serif">{_fmt_tick(t)}</text>')
    for i, s in enumerate(panel.series):
        color = _PALETTE[i % len(_PALETTE)]
        dash = _DASHES[i % len(_DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        segments, current = [], []
        for xv, yv in zip(s.x, s.y):
            bad = math.isnan(yv) or (panel.log_y and yv <= 0)
            if bad:
                if current:
                    segments.append(current)
                current = []
            else:
                current.append((x_pix(xv), y_pix(yv)))
        if current:
            segments.append(current)
        for seg in segments:
            pts = " ".join(f"{px:.2f},{py:.2f}" for px, py in seg)
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}"'
                         f' stroke-width="1.6"{dash_attr}/>')
    legend_y = py0 + 8
    for i, s in enumerate(panel.series):
        color = _PALETTE[i % len(_PALETTE)]
        dash = _DASHES[i % len(_DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        ly = legend_y + 15 * i
        lx = px0 + plot_w - 120
        parts.append(f'<line x1="{lx:.1f}" y1="{ly:.1f}" x2="{lx + 24:.1f}"'
                     f' y2="{ly:.1f}" stroke="{color}" stroke-width="1.6"{dash_attr}/>')
        parts.append(f'<text x="{lx + 29:.1f}" y="{ly + 3.5:.1f}" font-size="10"'
                     f' font-family="sans-serif">{s.label}</text>')
    return "\n".join(parts)


def render_figure(panels: list[Panel], path, panel_width: int = 430,
                  panel_height: int = 320) -> None:
    """Write a figure with the given panels side by side as one SVG file."""
    if not panels:
        raise ValueError("need at least one panel")
    total_w = panel_width * len(panels)
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}"'
        f' height="{panel_height}" viewBox="0 0 {total_w} {panel_height}">',
        f'<rect width="{total_w}" height="{panel_height}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        body.append(_panel_svg(panel, i * panel_width, 0, panel_width, panel_height))
    body.append("</svg>")
    with open(path, "w") as handle:
        handle.write("\n".join(body) + "\n")
