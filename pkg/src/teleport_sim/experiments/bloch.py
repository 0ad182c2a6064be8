"""Averages over cat qubits spread uniformly on the Bloch sphere.

With density sin(theta) / (4 pi) the average is (1/4pi) int dcos(theta) dphi,
so Gauss-Legendre nodes in cos(theta) and a uniform phi rule are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from ..charfunc import CONVERGENCE_TOL, ConvergenceError


@dataclass(frozen=True)
class BlochRule:
    n_theta: int = 8
    n_phi: int = 8

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(theta, phi, weight) flattened; weights sum to one."""
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        theta = np.arccos(x)
        phi = 2 * math.pi * np.arange(self.n_phi) / self.n_phi
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        ww = np.repeat(w / 2, self.n_phi) / self.n_phi
        return tt.ravel(), pp.ravel(), ww

    @cached_property
    def coefficients(self) -> np.ndarray:
        """c[node] = (cos(theta/2), e^{i phi} sin(theta/2)), shape (N, 2)."""
        theta, phi, _ = self.nodes
        return np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)

    def quartic_tensor(self) -> np.ndarray:
        """Q[K, L, i, j] = average of c_K* c_L c_i c_j*."""
        c = self.coefficients
        w = self.nodes[2]
        return np.einsum("p,pK,pL,pi,pj->KLij", w, c.conj(), c, c, c.conj(), optimize=True)

    def ratio_average(self, num: np.ndarray, den: np.ndarray):
        """Average of N(c) / D(c) for a quartic numerator and quadratic denominator.

        Returns an object with ``f_bar`` and the averaged denominator as ``p_bsm``.
        """
        from .models import HbsmOutcomeSummary

        c = self.coefficients
        w = self.nodes[2]
        n = np.einsum("pK,pL,pi,pj,KLij->p", c.conj(), c, c, c.conj(), num, optimize=True).real
        d = np.einsum("pi,pj,ij->p", c, c.conj(), den, optimize=True).real
        if np.any(d <= 0):
            raise ZeroDivisionError("H-BSM success probability vanishes for some input")
        return HbsmOutcomeSummary(float(np.clip(np.dot(w, n / d), 0.0, 1.0)), float(np.dot(w, d)))

    def doubled(self) -> "BlochRule":
        return BlochRule(2 * self.n_theta, 2 * self.n_phi)


def bloch_average(
    f: Callable[[float, float], float],
    n_theta: int = 8,
    n_phi: int = 8,
    check: bool = True,
) -> float:
    """Average of f(theta, phi) with density sin(theta) / (4 pi)."""

    def run(rule: BlochRule) -> float:
        theta, phi, w = rule.nodes
        return float(sum(wi * f(t, p) for t, p, wi in zip(theta, phi, w)))

    rule = BlochRule(n_theta, n_phi)
    value = run(rule)
    if check:
        finer = run(rule.doubled())
        if abs(finer - value) >= CONVERGENCE_TOL:
            raise ConvergenceError(f"Bloch average moved by {abs(finer - value):.2e} under node doubling")
    return value
