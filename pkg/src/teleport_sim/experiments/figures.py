"""Figure definitions and the sweep executor.

A figure is a list of curves; a curve is one runner with fixed settings swept
over one or two grid axes. Every curve becomes its own CSV.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from ..nongauss import NgOpSpec
from .runners import SweepRow, run_cvbsm, run_direct, run_hbsm

FIGURE_IDS = ("2a", "2b", "3", "4a", "4b", "5", "7a", "7b", "8")
CLASSICAL_LIMIT = 2.0 / 3.0
MONOTONE_TOL = 1e-4


def _steps(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def grids(resolution: str = "coarse") -> dict[str, list[float]]:
    scale = {"coarse": 1.0, "fine": 0.5}.get(resolution)
    if scale is None:
        raise ValueError("grid must be 'coarse' or 'fine'")
    return {
        "total_loss_db": _steps(0.0, 15.0, 0.5 * scale),
        "squeeze_db": _steps(1.0, 16.0, 0.5 * scale),
        "alpha": _steps(0.1, 2.0, 0.1 * scale),
    }


@dataclass(frozen=True)
class Curve:
    name: str
    runner: str  # cvbsm | hbsm | direct | classical
    axes: tuple[str, ...]
    fixed: dict = field(default_factory=dict)
    label: str = ""

    @property
    def optimized(self) -> tuple[str, ...]:
        return tuple(self.fixed.get("optimize", ()))


@dataclass(frozen=True)
class Figure:
    id: str
    title: str
    curves: tuple[Curve, ...]
    notes: dict = field(default_factory=dict)


def _ng(kind: str, placement: str = "before", target: str = "both", **kw) -> NgOpSpec:
    return NgOpSpec(kind, placement, target=target, **kw)


def figure(id: str) -> Figure:
    surf = ("squeeze_db", "total_loss_db")
    loss = ("total_loss_db",)
    if id in ("2a", "2b"):
        a = 0.5 if id == "2a" else 1.0
        base = {"input": "cv-qubit", "alpha": a}
        return Figure(id, f"CV qubit, alpha = {a}", (
            Curve("cvbsm", "cvbsm", surf, {**base, "optimize": ("g",)}, "CV-BSM, g optimised"),
            Curve("hbsm", "hbsm", surf, base, "H-BSM"),
            Curve("classical", "classical", loss, base, "classical limit 2/3"),
        ), {"bloch_average": True})
    if id == "3":
        base = {"input": "hybrid-dv", "alpha": 0.5}
        return Figure(id, "DV qubit of the hybrid state", (
            Curve("cvbsm", "cvbsm", surf, {**base, "optimize": ("g",)}, "CV-BSM, g optimised"),
            Curve("hbsm", "hbsm", surf, base, "H-BSM"),
            Curve("direct", "direct", loss, base, "direct transmission"),
        ), {"alpha_assumption": "alpha = 0.5; the fidelity does not depend on alpha"})
    if id in ("4a", "4b"):
        s = 5.0 if id == "4a" else 10.0
        curves = []
        for a in (0.5, 1.0):
            base = {"input": "hybrid-cv", "alpha": a, "squeeze_db": s}
            curves += [
                Curve(f"cvbsm_a{a:g}", "cvbsm", loss, {**base, "optimize": ("g",)}, f"CV-BSM a={a:g}"),
                Curve(f"hbsm_a{a:g}", "hbsm", loss, base, f"H-BSM a={a:g}"),
                Curve(f"hbsm-incomplete_a{a:g}", "hbsm", loss, {**base, "complete": False}, f"incomplete H-BSM a={a:g}"),
            ]
        return Figure(id, f"CV qubit of the hybrid state, {s:g} dB squeezing", tuple(curves),
                      {"alpha_assumption": "alpha in {0.5, 1}"})
    if id == "5":
        ax = ("alpha", "total_loss_db")
        base = {"input": "hybrid-cv", "squeeze_db": 8.0}
        return Figure(id, "CV qubit of the hybrid state, optimised squeezing", (
            Curve("hbsm", "hbsm", ax, {**base, "optimize": ("squeeze_db",)}, "H-BSM, r optimised"),
            Curve("cvbsm", "cvbsm", ax, {**base, "optimize": ("squeeze_db", "g")}, "CV-BSM, r and g optimised"),
            Curve("direct", "direct", ax, {"input": "hybrid-cv"}, "direct transmission"),
        ), {"squeeze_cap_db": 16.0})
    if id in ("7a", "7b"):
        base = {"input": "hybrid-cv", "alpha": 0.5, "squeeze_db": 3.0}
        if id == "7b":
            base["optimize"] = ("squeeze_db",)
        ops = [
            ("no-op", None),
            ("ps-tx", _ng("symmetric-ps", "before")),
            ("ps-rx", _ng("symmetric-ps", "after")),
            ("pa-tx", _ng("symmetric-pa", "before")),
            ("pa-rx", _ng("symmetric-pa", "after")),
            ("dps-tx", _ng("delocalized-ps")),
            ("dpa-tx", _ng("delocalized-pa")),
        ]
        return Figure(id, "H-BSM with subtraction and addition", tuple(
            Curve(n, "hbsm", loss, {**base, "ng": op}, n) for n, op in ops
        ), {"alpha_assumption": "alpha = 0.5, loss swept only", "idealized": True})
    if id == "8":
        base = {"input": "hybrid-cv", "alpha": 0.5}
        cat = lambda target: {**base, "ng": _ng("catalysis", "after", target, tc=0.5), "optimize": ("tc",)}
        return Figure(id, "H-BSM with catalysis and scissors", (
            Curve("no-op", "hbsm", surf, base, "no operation"),
            Curve("pc-both", "hbsm", surf, cat("both"), "catalysis, both modes"),
            Curve("pc-sender", "hbsm", surf, cat("sender"), "catalysis, sender"),
            Curve("pc-receiver", "hbsm", surf, cat("receiver"), "catalysis, receiver"),
            Curve("qs-both", "hbsm", surf, {**base, "ng": _ng("scissors", "after", ts=0.5), "optimize": ("ts",)}, "scissors"),
        ), {"catalysis_placement": "after transmission"})
    raise ValueError(f"unknown figure {id!r}; choose from {FIGURE_IDS}")


def curve_tasks(fig: Figure, curve: Curve, grid: dict[str, list[float]]) -> list[dict[str, Any]]:
    """Grid points in axis order with the last axis (loss) varying fastest."""
    out = []
    for values in itertools.product(*(grid[a] for a in curve.axes)):
        kw = dict(curve.fixed)
        kw.update(zip(curve.axes, values))
        kw["figure"] = fig.id
        out.append({"runner": curve.runner, "kwargs": kw})
    return out


RUNNERS = {"cvbsm": run_cvbsm, "hbsm": run_hbsm, "direct": run_direct}


def run_task(task: dict[str, Any]) -> SweepRow:
    kw = dict(task["kwargs"])
    if task["runner"] == "classical":
        return SweepRow(
            kw["figure"], "classical", kw["input"], kw["alpha"], kw["total_loss_db"], None, None,
            None, None, None, None, CLASSICAL_LIMIT, 1.0, 1.0, 1.0, "analytic", True,
            extra={"invariants": True},
        )
    if task["runner"] == "direct":
        kw.pop("squeeze_db", None)
        kw.pop("optimize", None)
    return RUNNERS[task["runner"]](**kw)


def execute(tasks: list[dict[str, Any]], threads: int = 1) -> list[SweepRow]:
    """Run tasks on a bounded process pool; results keep task order."""
    if threads <= 1 or len(tasks) < 2:
        return [run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_task, tasks, chunksize=max(1, len(tasks) // (8 * threads))))


def run_figure_rows(id: str, resolution: str = "coarse", threads: int = 1) -> tuple[Figure, dict[str, list[SweepRow]]]:
    fig = figure(id)
    grid = grids(resolution)
    tasks, spans = [], []
    for c in fig.curves:
        ct = curve_tasks(fig, c, grid)
        spans.append((c.name, len(tasks), len(tasks) + len(ct)))
        tasks += ct
    rows = execute(tasks, threads)
    return fig, {name: rows[a:b] for name, a, b in spans}


def _series_key(row: SweepRow, optimized: Iterable[str]) -> tuple:
    opt = set(optimized)
    return (
        row.protocol,
        row.alpha,
        None if "squeeze_db" in opt else row.squeeze_db,
        None if "g" in opt or row.protocol != "cvbsm" else row.g,
        row.ng_kind,
        row.ng_placement,
    )


def monotonicity_violations(rows: list[SweepRow], optimized: Iterable[str] = (), tol: float = MONOTONE_TOL) -> list[str]:
    """Describe every increase of f_bar with loss larger than tol."""
    series: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        series.setdefault(_series_key(row, optimized), []).append(row)
    bad = []
    for key, rs in series.items():
        rs = sorted(rs, key=lambda r: r.total_loss_db)
        for a, b in zip(rs, rs[1:]):
            if b.f_bar > a.f_bar + tol:
                bad.append(f"{key}: F rises {a.f_bar:.6f} -> {b.f_bar:.6f} between {a.total_loss_db:g} and {b.total_loss_db:g} dB")
    return bad


class MonotonicityError(RuntimeError):
    """Fidelity increased with channel loss beyond tolerance."""


@dataclass
class FigureRun:
    figure: Figure
    curves: dict[str, list[SweepRow]]
    violations: list[str]
    files: list[str]

    @property
    def unconverged(self) -> int:
        return sum(not r.converged for rows in self.curves.values() for r in rows)

    @property
    def invalid(self) -> int:
        return sum(not r.extra.get("invariants", True) for rows in self.curves.values() for r in rows)


def run_figure(id: str, out_dir, resolution: str = "coarse", threads: int = 1, strict: bool = True) -> FigureRun:
    """Compute one figure, write one CSV per curve, an SVG and metadata.

    With ``strict`` a monotonicity violation raises after all files are written.
    """
    from pathlib import Path

    from .output import plot_figure, write_csv, write_metadata

    fig, curves = run_figure_rows(id, resolution, threads)
    out = Path(out_dir) / f"fig{id}"
    out.mkdir(parents=True, exist_ok=True)
    files, violations = [], []
    for c in fig.curves:
        path = out / f"{c.name}.csv"
        write_csv(path, curves[c.name])
        files.append(str(path))
        violations += [f"{c.name}: {v}" for v in monotonicity_violations(curves[c.name], c.optimized)]
    svg = out / f"fig{id}.svg"
    svg.write_text(plot_figure(fig, curves))
    files.append(str(svg))
    run = FigureRun(fig, curves, violations, files)
    write_metadata(out / "metadata.json", {
        "figure": id,
        "title": fig.title,
        "grid": resolution,
        "axes": grids(resolution),
        "curves": {c.name: {"runner": c.runner, "axes": list(c.axes), "fixed": _jsonable(c.fixed)} for c in fig.curves},
        "idealized": any(r.idealized for rows in curves.values() for r in rows),
        "notes": fig.notes,
        "unconverged_rows": run.unconverged,
        "invalid_rows": run.invalid,
        "monotonicity_violations": violations,
    })
    if strict and violations:
        raise MonotonicityError(f"figure {id}: {len(violations)} monotonicity violation(s); first: {violations[0]}")
    return run


def _jsonable(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        if isinstance(v, NgOpSpec):
            v = {"kind": v.kind, "placement": v.placement, "tc": v.tc, "ts": v.ts, "target": v.target}
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def spec_tasks(spec) -> list[dict[str, Any]]:
    """Tasks for a configured sweep (see ``spec.ExperimentSpec``)."""
    tasks = []
    for p in spec.points():
        kw: dict[str, Any] = {
            "input": spec.input,
            "alpha": p["alpha"],
            "total_loss_db": p["total_loss_db"],
            "figure": spec.figure,
            "t1_db": spec.t1_db,
            "t2_db": spec.t2_db,
            "bloch": (spec.bloch.n_theta, spec.bloch.n_phi),
            "adaptive_cutoff": spec.adaptive_cutoff,
        }
        if spec.protocol != "direct":
            kw["squeeze_db"] = p["squeeze_db"]
            kw["optimize"] = spec.optimized
        if spec.protocol == "cvbsm":
            kw["g"] = 1.0 if spec.g == "optimize" else spec.g
            kw["route"] = spec.route
        if spec.protocol.startswith("hbsm"):
            kw["complete"] = spec.protocol == "hbsm"
            if spec.ng is not None:
                kw["ng"] = spec.ng.spec()
        tasks.append({"runner": "hbsm" if spec.protocol.startswith("hbsm") else spec.protocol, "kwargs": kw})
    return tasks


def run_sweep(spec, out_dir, threads: int = 1, strict: bool = True) -> list[SweepRow]:
    from pathlib import Path

    from .output import write_csv, write_metadata

    rows = execute(spec_tasks(spec), threads)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{spec.figure}.csv", rows)
    violations = monotonicity_violations(rows, spec.optimized)
    write_metadata(out / f"{spec.figure}.metadata.json", {
        "config": _jsonable({k: getattr(spec, k) for k in ("protocol", "input", "alpha", "total_loss_db", "squeeze_db", "g", "route")}),
        "ng": None if spec.ng is None else _jsonable(vars(spec.ng)),
        "idealized": any(r.idealized for r in rows),
        "unconverged_rows": sum(not r.converged for r in rows),
        "monotonicity_violations": violations,
    })
    if strict and violations:
        raise MonotonicityError(f"{len(violations)} monotonicity violation(s); first: {violations[0]}")
    return rows
