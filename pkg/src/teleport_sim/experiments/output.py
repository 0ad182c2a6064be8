"""CSV, metadata and self-contained SVG emission."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .. import kernels
from .runners import CSV_FIELDS, SweepRow

PALETTE = ("#1f77b4", "#d62728", "#7f7f7f", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def write_csv(path: Path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for row in rows:
            w.writerow(row.csv_values())


def write_metadata(path: Path, payload: dict) -> None:
    payload = {"kernel_backend": kernels.BACKEND, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ------------------------------------------------------------------ SVG

W, H, PAD = 360, 260, 46


def _scale(v, lo, hi, a, b):
    return a + (b - a) * (0.5 if hi == lo else (v - lo) / (hi - lo))


def _axes(x0: float, y0: float, xr, yr, xlabel: str, ylabel: str, title: str) -> list[str]:
    out = [
        f'<g transform="translate({x0},{y0})">',
        f'<rect x="{PAD}" y="10" width="{W - PAD - 10}" height="{H - PAD - 10}" fill="none" stroke="#333"/>',
        f'<text x="{W / 2}" y="8" font-size="11" text-anchor="middle">{escape(title)}</text>',
        f'<text x="{W / 2}" y="{H - 8}" font-size="10" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="12" y="{H / 2}" font-size="10" text-anchor="middle" transform="rotate(-90 12 {H / 2})">{escape(ylabel)}</text>',
    ]
    for v in np.linspace(*xr, 4):
        x = _scale(v, *xr, PAD, W - 10)
        out.append(f'<text x="{x:.1f}" y="{H - PAD + 14}" font-size="9" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(*yr, 5):
        y = _scale(v, *yr, H - PAD, 10)
        out.append(f'<text x="{PAD - 4}" y="{y + 3:.1f}" font-size="9" text-anchor="end">{v:.3g}</text>')
    return out


def line_panel(x0, y0, series: list[tuple[str, list[float], list[float]]], xlabel, ylabel, title, log=False) -> list[str]:
    xs = [x for _, sx, _ in series for x in sx]
    ys = [y for _, _, sy in series for y in sy if not log or y > 0]
    if not xs or not ys:
        return []
    tf = (lambda v: math.log10(v)) if log else (lambda v: v)
    xr = (min(xs), max(xs))
    yr = (tf(min(ys)), tf(max(ys)))
    out = _axes(x0, y0, xr, yr, xlabel, ("log10 " if log else "") + ylabel, title)
    for k, (name, sx, sy) in enumerate(series):
        pts = " ".join(
            f"{_scale(x, *xr, PAD, W - 10):.1f},{_scale(tf(y), *yr, H - PAD, 10):.1f}"
            for x, y in zip(sx, sy)
            if not log or y > 0
        )
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.4"/>')
        out.append(f'<text x="{W - 14}" y="{22 + 11 * k}" font-size="9" fill="{color}" text-anchor="end">{escape(name)}</text>')
    out.append("</g>")
    return out


def heat_panel(x0, y0, xs, ys, z, xlabel, ylabel, title) -> list[str]:
    """z[i, j] at (xs[j], ys[i]); colour from 0 (dark) to 1 (light)."""
    xr, yr = (min(xs), max(xs)), (min(ys), max(ys))
    out = _axes(x0, y0, xr, yr, xlabel, ylabel, title)
    cw = (W - PAD - 10) / max(len(xs), 1)
    ch = (H - PAD - 10) / max(len(ys), 1)
    for i, _ in enumerate(ys):
        for j, _ in enumerate(xs):
            v = float(np.clip(z[i, j], 0, 1))
            shade = int(40 + 200 * v)
            x = PAD + j * cw
            y = H - PAD - (i + 1) * ch
            out.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw + 0.3:.1f}" height="{ch + 0.3:.1f}" fill="rgb({shade},{shade // 2 + 60},{255 - shade // 2})"/>')
    out.append("</g>")
    return out


def figure_svg(title: str, panels: list[list[str]], cols: int = 2) -> str:
    n = max(len(panels), 1)
    rows = math.ceil(n / cols)
    width, height = W * min(n, cols), H * rows + 24
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<text x="{width / 2}" y="16" font-size="13" text-anchor="middle">{escape(title)}</text>',
    ]
    for k, p in enumerate(panels):
        body.append(f'<g transform="translate({(k % cols) * W},{24 + (k // cols) * H})">')
        body.extend(p)
        body.append("</g>")
    body.append("</svg>")
    return "\n".join(body) + "\n"


def _grid_of(rows: list[SweepRow], ax: str):
    ys = sorted({getattr(r, ax) for r in rows})
    xs = sorted({r.total_loss_db for r in rows})
    z = np.full((len(ys), len(xs)), np.nan)
    for r in rows:
        z[ys.index(getattr(r, ax)), xs.index(r.total_loss_db)] = r.f_bar
    return xs, ys, z


def plot_figure(fig, curves: dict[str, list[SweepRow]]) -> str:
    panels = []
    lines = []
    probs = []
    for c in fig.curves:
        rows = curves[c.name]
        if len(c.axes) == 1:
            rs = sorted(rows, key=lambda r: r.total_loss_db)
            lines.append((c.label or c.name, [r.total_loss_db for r in rs], [r.f_bar for r in rs]))
            if c.runner == "hbsm":
                probs.append((c.label or c.name, [r.total_loss_db for r in rs], [r.p_total for r in rs]))
        else:
            ax = c.axes[0]
            xs, ys, z = _grid_of(rows, ax)
            panels.append(heat_panel(0, 0, xs, ys, z, "total loss [dB]", ax, f"{c.label or c.name}: F"))
    if lines:
        panels.insert(0, line_panel(0, 0, lines, "total loss [dB]", "F", "average fidelity"))
    if probs and fig.id.startswith("4"):
        panels.insert(1, line_panel(0, 0, probs, "total loss [dB]", "P_total", "success probability", log=True))
    return figure_svg(f"{fig.id}: {fig.title}", panels)
