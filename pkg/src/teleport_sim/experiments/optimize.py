"""Coordinate-wise grid search with golden-section polish.

Ties on the grid go to the smallest parameter value. Objectives that raise
``HeraldingError`` count as minus infinity, so impossible heralds never win.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..nongauss import HeraldingError

GOLDEN_TOL = 1e-4
_INVPHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class Domain:
    lo: float
    hi: float
    step: float

    def grid(self) -> np.ndarray:
        n = int(round((self.hi - self.lo) / self.step))
        return self.lo + self.step * np.arange(n + 1)


GAIN = Domain(0.1, 2.0, 0.01)
SQUEEZE_DB = Domain(0.25, 16.0, 0.25)
TRANSMISSIVITY = Domain(0.02, 0.98, 0.02)

DOMAINS = {"g": GAIN, "squeeze_db": SQUEEZE_DB, "tc": TRANSMISSIVITY, "ts": TRANSMISSIVITY}


def _safe(f: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(x: float) -> float:
        try:
            v = f(x)
        except HeraldingError:
            return -math.inf
        return -math.inf if not math.isfinite(v) else v

    return wrapped


def grid_max(f: Callable[[float], float], xs: np.ndarray) -> tuple[float, float, int]:
    """First (smallest) grid point with the largest value."""
    best_i, best_v = 0, -math.inf
    for i, x in enumerate(xs):
        v = f(float(x))
        if v > best_v:
            best_i, best_v = i, v
    return float(xs[best_i]), best_v, best_i


def golden_max(f: Callable[[float], float], a: float, b: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def maximize_1d(f: Callable[[float], float], domain: Domain, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Grid scan, then golden section inside the neighbouring grid cells.

    The polished point replaces the grid point only when strictly better, so
    plateaus and monotone objectives return grid (boundary) values.
    """
    f = _safe(f)
    xs = domain.grid()
    x0, v0, i = grid_max(f, xs)
    if not math.isfinite(v0):
        return x0, v0
    lo = float(xs[max(i - 1, 0)])
    hi = float(xs[min(i + 1, len(xs) - 1)])
    if hi > lo:
        x1, v1 = golden_max(f, lo, hi, tol)
        if v1 > v0 + 1e-12:
            return x1, v1
    return x0, v0


def maximize(
    objective: Callable[[Mapping[str, float]], float],
    start: Mapping[str, float],
    free: list[str],
    domains: Mapping[str, Domain] = DOMAINS,
    max_cycles: int = 4,
    tol: float = GOLDEN_TOL,
) -> tuple[dict[str, float], float]:
    """Cycle over the free coordinates until no coordinate moves by more than tol."""
    point = dict(start)
    for name in free:
        point.setdefault(name, domains[name].lo)
    value = -math.inf
    for _ in range(max_cycles if len(free) > 1 else 1):
        moved = False
        for name in free:

            def f1(x: float, name=name) -> float:
                trial = dict(point)
                trial[name] = x
                return objective(trial)

            x, v = maximize_1d(f1, domains[name], tol)
            if abs(x - point[name]) > tol:
                moved = True
            point[name] = x
            value = v
        if not moved:
            break
    return point, value
