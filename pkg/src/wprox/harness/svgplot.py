"""Self-contained SVG line plots — no renderer dependency.

A small panel/series model is rendered straight to SVG text: linear or
log-scale y axes with sensible ticks, overlaid polyline series, a legend and
optional point markers. Convergence panels (KL, squared W2) use log y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

_PANEL_W = 560
_PANEL_H = 400
_MARGIN_L = 78
_MARGIN_R = 18
_MARGIN_T = 46
_MARGIN_B = 54


@dataclass
class Series:
    xs: list
    ys: list
    label: str = ""
    color: str = _PALETTE[0]
    width: float = 1.8
    opacity: float = 1.0
    dash: str | None = None
    markers: bool = False


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    logy: bool = False


def _nice_step(raw: float) -> float:
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _linear_ticks(lo: float, hi: float, target: int = 5) -> list:
    if hi <= lo:
        hi = lo + 1.0
    step = _nice_step((hi - lo) / max(target, 2))
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * max(abs(hi), 1.0):
        ticks.append(0.0 if abs(t) < 1e-15 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    ticks = [10.0 ** e for e in range(lo_e, hi_e + 1)]
    if len(ticks) <= 2:
        extra = []
        for base in ticks:
            extra.extend((2 * base, 5 * base))
        ticks = sorted(set(ticks) | set(extra))
    return [t for t in ticks if lo / 1.5 <= t <= hi * 1.5]


def _fmt_tick(value: float) -> str:
    if value == 0:
        return "0"
    if abs(value) >= 1e4 or abs(value) < 1e-3:
        return f"{value:.0e}".replace("e-0", "e-").replace("e+0", "e").replace("e+", "e")
    return f"{value:g}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _render_panel(panel: Panel, x_off: int, buf: list) -> None:
    if not panel.series or all(len(s.xs) == 0 for s in panel.series):
        raise ValueError(f"panel {panel.title!r} has no data to plot")
    plot_w = _PANEL_W - _MARGIN_L - _MARGIN_R
    plot_h = _PANEL_H - _MARGIN_T - _MARGIN_B
    ox = x_off + _MARGIN_L
    oy = _MARGIN_T

    xs_all = [x for s in panel.series for x in s.xs]
    if panel.logy:
        ys_all = [y for s in panel.series for y in s.ys if y is not None and y > 0.0]
        if not ys_all:
            raise ValueError(f"panel {panel.title!r}: no positive values for log scale")
    else:
        ys_all = [y for s in panel.series for y in s.ys if y is not None]
    x_lo, x_hi = min(xs_all), max(xs_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    y_lo, y_hi = min(ys_all), max(ys_all)
    if panel.logy:
        ly_lo, ly_hi = math.log10(y_lo), math.log10(y_hi)
        if ly_hi - ly_lo < 0.5:
            ly_lo -= 0.25
            ly_hi += 0.25
        pad = 0.05 * (ly_hi - ly_lo)
        ly_lo -= pad
        ly_hi += pad

        def y_pix(v):
            return oy + plot_h * (1.0 - (math.log10(v) - ly_lo) / (ly_hi - ly_lo))

        ticks = _log_ticks(10 ** ly_lo, 10 ** ly_hi)
    else:
        if y_hi == y_lo:
            y_hi = y_lo + 1.0
        pad = 0.06 * (y_hi - y_lo)
        y_lo -= pad
        y_hi += pad

        def y_pix(v):
            return oy + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo))

        ticks = _linear_ticks(y_lo, y_hi)

    def x_pix(v):
        return ox + plot_w * (v - x_lo) / (x_hi - x_lo)

    buf.append(
        f'<rect x="{ox}" y="{oy}" width="{plot_w}" height="{plot_h}" '
        'fill="white" stroke="#444" stroke-width="1"/>'
    )
    buf.append(
        f'<text x="{x_off + _PANEL_W / 2:.0f}" y="{_MARGIN_T - 18}" text-anchor="middle" '
        f'font-size="15" font-weight="bold">{_esc(panel.title)}</text>'
    )
    for t in ticks:
        if panel.logy and (t <= 0):
            continue
        py = y_pix(t)
        if py < oy - 1 or py > oy + plot_h + 1:
            continue
        buf.append(
            f'<line x1="{ox}" y1="{py:.1f}" x2="{ox + plot_w}" y2="{py:.1f}" '
            'stroke="#ddd" stroke-width="0.7"/>'
        )
        buf.append(
            f'<text x="{ox - 7}" y="{py + 4:.1f}" text-anchor="end" font-size="11">'
            f"{_fmt_tick(t)}</text>"
        )
    for t in _linear_ticks(x_lo, x_hi, 6):
        px = x_pix(t)
        if px < ox - 1 or px > ox + plot_w + 1:
            continue
        buf.append(
            f'<line x1="{px:.1f}" y1="{oy + plot_h}" x2="{px:.1f}" y2="{oy + plot_h + 4}" '
            'stroke="#444" stroke-width="1"/>'
        )
        buf.append(
            f'<text x="{px:.1f}" y="{oy + plot_h + 17}" text-anchor="middle" font-size="11">'
            f"{_fmt_tick(t)}</text>"
        )
    buf.append(
        f'<text x="{ox + plot_w / 2:.0f}" y="{oy + plot_h + 38}" text-anchor="middle" '
        f'font-size="13">{_esc(panel.xlabel)}</text>'
    )
    buf.append(
        f'<text x="{x_off + 16}" y="{oy + plot_h / 2:.0f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 {x_off + 16} {oy + plot_h / 2:.0f})">{_esc(panel.ylabel)}</text>'
    )

    for s in panel.series:
        pts = [
            (x_pix(x), y_pix(y))
            for x, y in zip(s.xs, s.ys)
            if y is not None and (not panel.logy or y > 0.0)
        ]
        if not pts:
            continue
        attrs = (
            f'fill="none" stroke="{s.color}" stroke-width="{s.width}" '
            f'stroke-opacity="{s.opacity}"'
        )
        if s.dash:
            attrs += f' stroke-dasharray="{s.dash}"'
        coords = " ".join(f"{px:.1f},{py:.1f}" for px, py in pts)
        buf.append(f'<polyline points="{coords}" {attrs}/>')
        if s.markers:
            for px, py in pts:
                buf.append(
                    f'<circle cx="{px:.1f}" cy="{py:.1f}" r="3.2" fill="{s.color}" '
                    f'fill-opacity="{s.opacity}"/>'
                )

    labeled = [s for s in panel.series if s.label]
    if labeled:
        lw = max(len(s.label) for s in labeled) * 7 + 40
        lx = ox + plot_w - lw - 8
        ly = oy + 8
        lh = 18 * len(labeled) + 8
        buf.append(
            f'<rect x="{lx}" y="{ly}" width="{lw}" height="{lh}" fill="white" '
            'fill-opacity="0.85" stroke="#999" stroke-width="0.7"/>'
        )
        for i, s in enumerate(labeled):
            yy = ly + 14 + 18 * i
            dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
            buf.append(
                f'<line x1="{lx + 6}" y1="{yy - 4}" x2="{lx + 28}" y2="{yy - 4}" '
                f'stroke="{s.color}" stroke-width="{s.width}"{dash}/>'
            )
            buf.append(f'<text x="{lx + 33}" y="{yy}" font-size="12">{_esc(s.label)}</text>')


def render_svg(panels: list, path) -> None:
    """Write a row of panels as one standalone SVG file."""
    if not panels:
        raise ValueError("no panels to render")
    total_w = _PANEL_W * len(panels)
    buf = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{_PANEL_H}" '
        f'viewBox="0 0 {total_w} {_PANEL_H}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{total_w}" height="{_PANEL_H}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        _render_panel(panel, i * _PANEL_W, buf)
    buf.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(buf) + "\n")


def _trace_xy(trace, attr):
    xs, ys = [], []
    for rec in trace:
        val = getattr(rec, attr)
        if val is not None:
            xs.append(rec.iteration)
            ys.append(val)
    return xs, ys


def emit_plot_svg(traces: dict, kind: str, path, mu: float | None = None,
                  xi: float | None = None) -> None:
    """Render experiment traces.

    traces maps a series label to a list of TraceRecord (kinds "gaussian"
    and "mfld") or, for kind "sweep", to a pair (particle_counts, w2_values).
    The Gaussian plot overlays the squared-rate bound (1+mu*xi)^(-2n)*KL_0
    when mu and xi are given.
    """
    if not traces:
        raise ValueError("no traces to plot")
    if kind == "gaussian":
        label, trace = next(iter(traces.items()))
        if not trace:
            raise ValueError("empty trace")
        xs, kls = _trace_xy(trace, "kl")
        panel = Panel("KL divergence to target", "iteration", "KL (log scale)", logy=True)
        panel.series.append(Series(xs, kls, label=label, color=_PALETTE[0]))
        if mu is not None and xi is not None and kls and kls[0] > 0:
            bound = [kls[0] / (1.0 + mu * xi) ** (2 * n) for n in xs]
            panel.series.append(
                Series(xs, bound, label="rate bound", color="#555555", dash="6,4", width=1.4)
            )
        render_svg([panel], path)
        return
    if kind == "mfld":
        if any(not t for t in traces.values()):
            raise ValueError("empty trace")
        panels = []
        colors = {lbl: _PALETTE[i % len(_PALETTE)] for i, lbl in enumerate(traces)}
        has_w2 = any(rec.w2_to_reference is not None for t in traces.values() for rec in t)
        if has_w2:
            p = Panel("squared W2 to reference", "iteration", "W2^2 (log scale)", logy=True)
            for lbl, trace in traces.items():
                xs, w2 = _trace_xy(trace, "w2_to_reference")
                p.series.append(Series(xs, [v * v for v in w2], label=lbl, color=colors[lbl]))
            panels.append(p)
        p = Panel("total objective", "iteration", "F_tau")
        for lbl, trace in traces.items():
            xs, ys = _trace_xy(trace, "total_objective")
            p.series.append(Series(xs, ys, label=lbl, color=colors[lbl]))
        panels.append(p)
        p = Panel("risk", "iteration", "R")
        for lbl, trace in traces.items():
            xs, ys = _trace_xy(trace, "risk")
            p.series.append(Series(xs, ys, label=lbl, color=colors[lbl]))
        panels.append(p)
        has_beta = any(rec.beta_norm_sq is not None for t in traces.values() for rec in t)
        if has_beta:
            p = Panel("inexactness", "iteration", "mean ||beta||^2 (log scale)", logy=True)
            for lbl, trace in traces.items():
                xs, ys = _trace_xy(trace, "beta_norm_sq")
                if xs:
                    p.series.append(Series(xs, ys, label=lbl, color=colors[lbl]))
            panels.append(p)
        render_svg(panels, path)
        return
    if kind == "sweep":
        panel = Panel("final W2 to reference vs particle count", "particles m",
                      "W2 (log scale)", logy=True)
        for i, (lbl, (ms, w2s)) in enumerate(traces.items()):
            panel.series.append(
                Series(list(ms), list(w2s), label=lbl, color=_PALETTE[i % len(_PALETTE)],
                       markers=True)
            )
        render_svg([panel], path)
        return
    raise ValueError(f"unknown plot kind {kind!r}")
