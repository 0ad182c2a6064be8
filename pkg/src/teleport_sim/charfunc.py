"""Characteristic functions, the averaged CV-BSM channel and fidelity quadrature.

Conventions: chi(xi) = tr{rho D(xi)}, and for any two operators

    tr{rho sigma} = (1/pi) int d^2 xi chi_rho(xi) chi_sigma(-xi),

which backs every fidelity integral here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .channel import ChannelSpec
from .fock import DimensionError, FockDims, FockOperator

CONVERGENCE_TOL = 1e-4


class ConvergenceError(RuntimeError):
    """Quadrature result moved by more than the tolerance when nodes were doubled."""


@dataclass(frozen=True)
class GaussianCF:
    """exp(-1/2 [a |x1|^2 + b |x2|^2 - c (x1 x2 + x1* x2*)]).

    Covers the two-mode squeezed vacuum and its image under independent
    pure-loss channels.
    """

    a: float
    b: float
    c: float

    @classmethod
    def tmsv(cls, lam: float) -> "GaussianCF":
        if not 0 <= lam < 1:
            raise ValueError("lambda must lie in [0, 1)")
        s = 1 - lam**2
        return cls((1 + lam**2) / s, (1 + lam**2) / s, 2 * lam / s)

    def lossy(self, channel: ChannelSpec) -> "GaussianCF":
        t1, t2 = channel.t1, channel.t2
        return GaussianCF((1 - t1) + t1 * self.a, (1 - t2) + t2 * self.b, math.sqrt(t1 * t2) * self.c)

    def __call__(self, xi1, xi2):
        xi1 = np.asarray(xi1)
        xi2 = np.asarray(xi2)
        cross = 2 * np.real(xi1 * xi2)
        return np.exp(-0.5 * (self.a * np.abs(xi1) ** 2 + self.b * np.abs(xi2) ** 2 - self.c * cross))

    def teleport_noise(self, g: float) -> float:
        """s with chi(g xi*, xi) = exp(-s |xi|^2 / 2)."""
        return self.a * g * g + self.b - 2 * self.c * g


def chi_tmsv(xi1, xi2, lam: float):
    return GaussianCF.tmsv(lam)(xi1, xi2)


def chi_tmsv_lossy(xi1, xi2, lam: float, c: ChannelSpec):
    return GaussianCF.tmsv(lam).lossy(c)(xi1, xi2)


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar product rule on a disc of radius R: Gauss-Legendre radially, trapezoid in angle.

    ``weights`` integrate against the flat measure d^2 xi.
    """

    radius: float
    n_radial: int
    n_angular: int

    @classmethod
    def for_cutoff(cls, d: int, gain: float = 1.0) -> "QuadratureGrid":
        """Default grid for integrands built from operators on ``d`` levels.

        Every integrand carries an unscaled factor decaying like a Gaussian
        times a degree-2(d-1) polynomial, which sets the radius; a gain above
        one compresses the radial oscillations of the scaled factor.
        """
        radius = max(6.0, 3.0 * math.sqrt(2.0 * max(d - 1, 0)))
        return cls(radius, int(40 + 4 * d * max(gain, 1.0)), 4 * d + 8)

    @cached_property
    def _rule(self) -> tuple[np.ndarray, np.ndarray]:
        x, w = np.polynomial.legendre.leggauss(self.n_radial)
        rho = 0.5 * self.radius * (x + 1)
        wr = 0.5 * self.radius * w * rho
        phi = 2 * math.pi * np.arange(self.n_angular) / self.n_angular
        nodes = (rho[:, None] * np.exp(1j * phi)[None, :]).ravel()
        weights = np.repeat(wr * (2 * math.pi / self.n_angular), self.n_angular)
        return nodes, weights

    @property
    def nodes(self) -> np.ndarray:
        return self._rule[0]

    @cached_property
    def radial_rule(self) -> tuple[np.ndarray, np.ndarray]:
        """Radial nodes and weights (Jacobian included) of the same rule."""
        x, w = np.polynomial.legendre.leggauss(self.n_radial)
        rho = 0.5 * self.radius * (x + 1)
        return rho, 0.5 * self.radius * w * rho

    @property
    def weights(self) -> np.ndarray:
        return self._rule[1]

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.radius, 2 * self.n_radial, 2 * self.n_angular)

    def integrate(self, values) -> complex:
        return complex(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class StateCF:
    """Characteristic function of a one- or two-mode truncated operator."""

    rho: FockOperator

    def __post_init__(self):
        if self.rho.n_modes not in (1, 2):
            raise DimensionError("StateCF supports one or two modes")

    @property
    def n_modes(self) -> int:
        return self.rho.n_modes

    def __call__(self, *xis):
        if len(xis) != self.n_modes:
            raise ValueError(f"expected {self.n_modes} arguments")
        if self.n_modes == 1:
            xi = np.asarray(xis[0], dtype=np.complex128)
            return kernels.char_stack(self.rho.entries[None], xi.ravel())[0].reshape(xi.shape)
        x3, x4 = np.broadcast_arrays(*(np.asarray(x, dtype=np.complex128) for x in xis))
        d3, d4 = self.rho.dims.per_mode
        dm3 = kernels.displacement_stack(x3.ravel(), d3)
        dm4 = kernels.displacement_stack(x4.ravel(), d4)
        t = self.rho.tensor_view()
        return np.einsum("acbd,pba,pdc->p", t, dm3, dm4, optimize=True).reshape(x3.shape)

    def outer(self, nodes3, nodes4) -> np.ndarray:
        """chi(xi3_p, xi4_q) on a tensor-product grid, shape (N3, N4)."""
        d3, d4 = self.rho.dims.per_mode
        dm3 = kernels.displacement_stack(nodes3, d3)
        dm4 = kernels.displacement_stack(nodes4, d4)
        t = self.rho.tensor_view()
        half = np.einsum("acbd,pba->pcd", t, dm3, optimize=True)
        return np.einsum("pcd,qdc->pq", half, dm4, optimize=True)

    def components(self, xi, teleported: int) -> np.ndarray:
        """f_ab(xi) = tr{<a|rho|b>_spectator D(xi)}, shape (ds, ds, N).

        For one mode the spectator is trivial and ds = 1.
        """
        xi = np.asarray(xi, dtype=np.complex128).ravel()
        if self.n_modes == 1:
            return kernels.char_stack(self.rho.entries[None], xi)[None]
        t = self.rho.tensor_view()
        if teleported == 1:
            blocks = np.transpose(t, (0, 2, 1, 3))  # [a, b, n, m] = <a n| rho |b m>
        elif teleported == 0:
            blocks = np.transpose(t, (1, 3, 0, 2))
        else:
            raise IndexError("teleported mode must be 0 or 1")
        ds, dt = blocks.shape[0], blocks.shape[2]
        flat = kernels.char_stack(np.ascontiguousarray(blocks.reshape(ds * ds, dt, dt)), xi)
        return flat.reshape(ds, ds, xi.size)


@dataclass(frozen=True, eq=False)
class OutputCF:
    """Outcome-averaged output of CV-BSM teleportation of one mode of ``inner``.

    chi_out = chi_in(..., g xi, ...) * chi'_TMSV(g xi*, xi) in the teleported slot.
    """

    inner: StateCF
    lam: float
    g: float
    channel: ChannelSpec = field(default_factory=ChannelSpec)
    teleported: int = 0

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("gain must be positive")

    @property
    def n_modes(self) -> int:
        return self.inner.n_modes

    @cached_property
    def noise(self) -> float:
        return GaussianCF.tmsv(self.lam).lossy(self.channel).teleport_noise(self.g)

    def resource_factor(self, xi):
        return np.exp(-0.5 * self.noise * np.abs(xi) ** 2)

    def __call__(self, *xis):
        if self.n_modes == 1:
            (xi,) = xis
            return self.inner(self.g * np.asarray(xi)) * self.resource_factor(xi)
        args = list(np.broadcast_arrays(*(np.asarray(x, dtype=np.complex128) for x in xis)))
        xt = args[self.teleported]
        args[self.teleported] = self.g * xt
        return self.inner(*args) * self.resource_factor(xt)

    def components(self, xi, teleported: int) -> np.ndarray:
        if teleported != self.teleported and self.n_modes == 2:
            raise ValueError("components must be taken along the teleported mode")
        xi = np.asarray(xi, dtype=np.complex128).ravel()
        return self.inner.components(self.g * xi, teleported) * self.resource_factor(xi)


def chi_state(rho: FockOperator, *xis):
    """tr{rho D(xi_1) ... D(xi_k)} for one or two modes."""
    return StateCF(rho)(*xis)


def chi_out_single(xi, chi_in, lam: float, g: float, c: ChannelSpec):
    if g <= 0:
        raise ValueError("gain must be positive")
    xi = np.asarray(xi, dtype=np.complex128)
    return chi_in(g * xi) * chi_tmsv_lossy(g * np.conj(xi), xi, lam, c)


def chi_out_hybrid(xi3, xi4, chi_in, lam: float, g: float, c: ChannelSpec, teleported: int = 1):
    """Output CF for a two-mode input with one mode (0 or 1) teleported."""
    if g <= 0:
        raise ValueError("gain must be positive")
    xi3 = np.asarray(xi3, dtype=np.complex128)
    xi4 = np.asarray(xi4, dtype=np.complex128)
    if teleported == 1:
        return chi_in(xi3, g * xi4) * chi_tmsv_lossy(g * np.conj(xi4), xi4, lam, c)
    if teleported == 0:
        return chi_in(g * xi3, xi4) * chi_tmsv_lossy(g * np.conj(xi3), xi3, lam, c)
    raise IndexError("teleported mode must be 0 or 1")


def _clamp_real(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-6:
        raise ConvergenceError(f"{what} has imaginary part {value.imag:.2e}")
    return min(max(value.real, 0.0), 1.0)


def _single_raw(chi_in, chi_out, grid: QuadratureGrid) -> complex:
    xi = grid.nodes
    return grid.integrate(chi_in(xi) * chi_out(-xi)) / math.pi


def _check_converged(f0: complex, f1: complex, what: str) -> None:
    if abs(f1 - f0) >= CONVERGENCE_TOL:
        raise ConvergenceError(f"{what}: doubling quadrature nodes moved the result by {abs(f1 - f0):.2e}")


def fidelity_cf_single(chi_in, chi_out, grid: QuadratureGrid | None = None, check: bool = True) -> float:
    """(1/pi) int d^2 xi chi_in(xi) chi_out(-xi) for single-mode CFs."""
    grid = grid or QuadratureGrid.for_cutoff(_cutoff_hint(chi_in, chi_out), _gain_hint(chi_out))
    f0 = _single_raw(chi_in, chi_out, grid)
    if check:
        _check_converged(f0, _single_raw(chi_in, chi_out, grid.refined()), "single-mode fidelity")
    return _clamp_real(f0, "single-mode fidelity")


def _cutoff_hint(*cfs, mode: int | None = None) -> int:
    """Largest cutoff among the CFs, restricted to ``mode`` when given."""
    d = 1
    for cf in cfs:
        base = cf.inner if isinstance(cf, OutputCF) else cf
        if isinstance(base, StateCF):
            per = base.rho.dims.per_mode
            d = max(d, per[mode] if mode is not None and len(per) > 1 else max(per))
    return d


def _gain_hint(chi_out) -> float:
    return chi_out.g if isinstance(chi_out, OutputCF) else 1.0


def _teleported_index(chi_in, chi_out) -> int:
    for cf in (chi_out, chi_in):
        if isinstance(cf, OutputCF):
            return cf.teleported
    return 1


def _factorized_raw(chi_in, chi_out, teleported: int, grid: QuadratureGrid) -> complex:
    xi = grid.nodes
    f_in = chi_in.components(xi, teleported)
    f_out = chi_out.components(-xi, teleported)
    ds = min(f_in.shape[0], f_out.shape[0])
    # spectator plane done exactly: sum_ab f_in[a, b] f_out[b, a]
    prod = np.einsum("abp,bap->p", f_in[:ds, :ds], f_out[:ds, :ds])
    return grid.integrate(prod) / math.pi


def _direct_raw(chi_in, chi_out, grid: QuadratureGrid) -> complex:
    x = grid.nodes
    w = grid.weights
    if isinstance(chi_in, StateCF):
        vin = chi_in.outer(x, x)
    else:
        vin = chi_in(x[:, None], x[None, :])
    if isinstance(chi_out, OutputCF):
        # chi_out(-x3, -x4) with the gain on the teleported slot
        if chi_out.teleported == 1:
            vout = chi_out.inner.outer(-x, -chi_out.g * x) * chi_out.resource_factor(x)[None, :]
        else:
            vout = chi_out.inner.outer(-chi_out.g * x, -x) * chi_out.resource_factor(x)[:, None]
    elif isinstance(chi_out, StateCF):
        vout = chi_out.outer(-x, -x)
    else:
        vout = chi_out(-x[:, None], -x[None, :])
    return complex(w @ (vin * vout) @ w) / math.pi**2


def fidelity_cf_hybrid(
    chi_in,
    chi_out,
    grid: QuadratureGrid | None = None,
    method: str = "factorized",
    check: bool = True,
) -> float:
    """(1/pi^2) int d^2 xi3 d^2 xi4 chi_in(xi3, xi4) chi_out(-xi3, -xi4).

    ``factorized`` expands both CFs over displacement matrix elements of the
    spectator mode so that its plane integrates exactly; ``direct`` runs the
    4-real-dimensional product rule and is meant for coarse cross-checks.
    """
    if method == "factorized":
        teleported = _teleported_index(chi_in, chi_out)
        # the spectator is summed exactly, so only the teleported mode sets the grid
        grid = grid or QuadratureGrid.for_cutoff(_cutoff_hint(chi_in, chi_out, mode=teleported), _gain_hint(chi_out))
        f0 = _factorized_raw(chi_in, chi_out, teleported, grid)
        if check:
            _check_converged(f0, _factorized_raw(chi_in, chi_out, teleported, grid.refined()), "hybrid fidelity")
    elif method == "direct":
        grid = grid or QuadratureGrid.for_cutoff(_cutoff_hint(chi_in, chi_out), _gain_hint(chi_out))
        f0 = _direct_raw(chi_in, chi_out, grid)
        if check:
            _check_converged(f0, _direct_raw(chi_in, chi_out, grid.refined()), "hybrid fidelity (direct)")
    else:
        raise ValueError(f"unknown method {method!r}")
    return _clamp_real(f0, "hybrid fidelity")


@dataclass(frozen=True, eq=False)
class Supermatrix:
    """Linear map on single-mode operators: out[j, k] = sum_mn E[j, k, m, n] rho[m, n]."""

    tensor: np.ndarray

    @property
    def d_in(self) -> int:
        return self.tensor.shape[2]

    @property
    def d_out(self) -> int:
        return self.tensor.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("jkmn,mn->jk", self.tensor, rho)

    def choi(self) -> np.ndarray:
        """sum_mn |m><n| (x) E(|m><n|), as a (d_in d_out) square matrix."""
        t = np.transpose(self.tensor, (2, 0, 3, 1))  # [m, j, n, k]
        n = self.d_in * self.d_out
        return t.reshape(n, n)

    def trace_defect(self) -> float:
        """max |tr E(|m><n|) - delta_mn|."""
        tr = np.einsum("jjmn->mn", self.tensor)
        return float(np.max(np.abs(tr - np.eye(self.d_in))))

    def apply(self, rho: FockOperator, mode: int) -> FockOperator:
        """Apply the map to one mode of a multi-mode operator."""
        n = rho.n_modes
        if rho.dims.per_mode[mode] > self.d_in:
            raise DimensionError("operator support exceeds the supermatrix input cutoff")
        rho = rho.padded(tuple(self.d_in if i == mode else d for i, d in enumerate(rho.dims.per_mode)))
        t = rho.tensor_view()
        out = np.tensordot(self.tensor, t, axes=([2, 3], [mode, n + mode]))
        # out axes: j, k, remaining ket axes..., remaining bra axes...
        order = list(range(2, 2 + 2 * (n - 1)))
        ket_rest, bra_rest = order[: n - 1], order[n - 1 :]
        ket = ket_rest[:mode] + [0] + ket_rest[mode:]
        bra = bra_rest[:mode] + [1] + bra_rest[mode:]
        out = np.transpose(out, ket + bra)
        per_mode = tuple(self.d_out if i == mode else d for i, d in enumerate(rho.dims.per_mode))
        dims = FockDims(per_mode)
        return FockOperator(dims, out.reshape(dims.total, dims.total))


def _supermatrix_raw(noise: float, g: float, d: int, d_out: int, grid: QuadratureGrid) -> np.ndarray:
    xi = grid.nodes
    w = grid.weights * np.exp(-0.5 * noise * np.abs(xi) ** 2) / math.pi
    dg = kernels.displacement_stack(g * xi, d)  # [p, n, m] = <n|D(g xi)|m> = chi_{|m><n|}(g xi)
    dm = kernels.displacement_stack(-xi, d_out)  # [p, j, k]
    a = (w[:, None] * dg.reshape(xi.size, d * d))
    e = dm.reshape(xi.size, d_out * d_out).T @ a  # [(j, k), (n, m)]
    return np.transpose(e.reshape(d_out, d_out, d, d), (0, 1, 3, 2))


def cvbsm_supermatrix(
    lam: float,
    g: float,
    c: ChannelSpec,
    d: int,
    d_out: int | None = None,
    grid: QuadratureGrid | None = None,
    check: bool = True,
) -> Supermatrix:
    """Fock-space realisation of the outcome-averaged CV-BSM channel.

    Element-wise reconstruction <j|E(|m><n|)|k> from the characteristic-function
    relation, with inputs on ``d`` levels and outputs on ``d_out`` levels.
    """
    if g <= 0:
        raise ValueError("gain must be positive")
    d_out = d if d_out is None else d_out
    noise = GaussianCF.tmsv(lam).lossy(c).teleport_noise(g)
    grid = grid or QuadratureGrid.for_cutoff(max(d, d_out), g)
    e0 = _supermatrix_raw(noise, g, d, d_out, grid)
    if check:
        e1 = _supermatrix_raw(noise, g, d, d_out, grid.refined())
        diff = float(np.max(np.abs(e1 - e0)))
        if diff >= CONVERGENCE_TOL:
            raise ConvergenceError(f"supermatrix moved by {diff:.2e} under node doubling")
    return Supermatrix(e0)


def _harmonics(ops: np.ndarray, dstack: np.ndarray, sign: bool) -> np.ndarray:
    """h[p, o, k] = sum_{m - n = k - (d - 1)} ops[o, n, m] dstack[p, m, n].

    With real radial arguments this is the k-th angular Fourier coefficient
    of chi_op along the circle through the node; ``sign`` rotates by pi.
    """
    n_ops, d, _ = ops.shape
    prod = np.einsum("onm,pmn->pomn", ops, dstack, optimize=True)
    m, n = np.indices((d, d))
    onehot = np.zeros((d * d, 2 * d - 1))
    onehot[np.arange(d * d), (m - n + d - 1).ravel()] = 1.0
    h = prod.reshape(-1, d * d) @ onehot
    h = h.reshape(dstack.shape[0], n_ops, 2 * d - 1)
    if sign:
        h = h * (-1.0) ** np.arange(-(d - 1), d)
    return h


def cf_overlap_matrix(a_ops, b_ops, g: float, noise: float, grid: QuadratureGrid) -> np.ndarray:
    """O[k, l] = (1/pi) int d^2 xi chi_{A_k}(xi) chi_{B_l}(-g xi) exp(-noise |xi|^2 / 2).

    The angular integral is done exactly by matching Fourier harmonics (the
    uniform angular rule of ``grid`` is exact for these integrands anyway),
    leaving only the radial Gauss-Legendre sum.
    """
    a_ops = np.asarray(a_ops, dtype=np.complex128)
    b_ops = np.asarray(b_ops, dtype=np.complex128)
    d = max(a_ops.shape[-1], b_ops.shape[-1])
    a_ops = _pad_ops(a_ops, d)
    b_ops = _pad_ops(b_ops, d)
    rho, wr = grid.radial_rule
    da = kernels.displacement_stack(rho.astype(np.complex128), d)
    db = kernels.displacement_stack((g * rho).astype(np.complex128), d)
    ha = _harmonics(a_ops, da, sign=False)
    hb = _harmonics(b_ops, db, sign=True)[:, :, ::-1]  # index k -> -k
    w = 2.0 * wr * np.exp(-0.5 * noise * rho**2)
    return np.einsum("p,pok,plk->ol", w, ha, hb, optimize=True)


def _pad_ops(ops: np.ndarray, d: int) -> np.ndarray:
    k = ops.shape[-1]
    if k == d:
        return ops
    return np.pad(ops, ((0, 0), (0, d - k), (0, d - k)))
