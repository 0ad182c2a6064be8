"""Dense linear algebra on truncated multi-mode Fock spaces.

Mode ordering is the Kronecker (row-major) ordering of ``FockDims.per_mode``:
mode 0 is the most significant index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import kernels


class DimensionError(ValueError):
    """Invalid or inconsistent Fock cutoff."""


class PreconditionError(ValueError):
    """An operation was called outside its domain."""


class TruncationError(RuntimeError):
    """Too much weight fell outside the truncated space."""


HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
EIG_TOL = 1e-9
MIN_RETAINED_TRACE = 0.95


@dataclass(frozen=True)
class FockDims:
    per_mode: tuple[int, ...]

    def __post_init__(self):
        per_mode = tuple(int(d) for d in self.per_mode)
        if not per_mode or any(d < 1 for d in per_mode):
            raise DimensionError(f"cutoffs must all be >= 1, got {self.per_mode}")
        object.__setattr__(self, "per_mode", per_mode)

    @property
    def total(self) -> int:
        return int(np.prod(self.per_mode))

    @property
    def n_modes(self) -> int:
        return len(self.per_mode)

    def __add__(self, other: "FockDims") -> "FockDims":
        return FockDims(self.per_mode + other.per_mode)


def _as_dims(dims) -> FockDims:
    if isinstance(dims, FockDims):
        return dims
    if isinstance(dims, (int, np.integer)):
        return FockDims((int(dims),))
    return FockDims(tuple(dims))


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator on a truncated Fock space.

    Used for density operators, projectors and mode operators alike.
    """

    dims: FockDims
    entries: np.ndarray

    def __post_init__(self):
        dims = _as_dims(self.dims)
        entries = np.asarray(self.entries, dtype=np.complex128)
        if entries.shape != (dims.total, dims.total):
            raise DimensionError(
                f"entries of shape {entries.shape} do not match dims {dims.per_mode}"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_ket(cls, ket, dims=None) -> "FockOperator":
        ket = np.asarray(ket, dtype=np.complex128).ravel()
        dims = _as_dims(dims if dims is not None else ket.size)
        return cls(dims, np.outer(ket, ket.conj()))

    @property
    def n_modes(self) -> int:
        return self.dims.n_modes

    def tensor_view(self) -> np.ndarray:
        """Entries reshaped to (d_0, ..., d_{k-1}, d_0, ..., d_{k-1})."""
        return self.entries.reshape(self.dims.per_mode * 2)

    def dagger(self) -> "FockOperator":
        return FockOperator(self.dims, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        if self.dims != other.dims:
            raise DimensionError(f"dims differ: {self.dims.per_mode} vs {other.dims.per_mode}")
        return FockOperator(self.dims, self.entries @ other.entries)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        if self.dims != other.dims:
            raise DimensionError(f"dims differ: {self.dims.per_mode} vs {other.dims.per_mode}")
        return FockOperator(self.dims, self.entries + other.entries)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "FockOperator":
        return FockOperator(self.dims, c * self.entries)

    def normalized(self) -> "FockOperator":
        tr = self.trace().real
        if tr <= 0:
            raise PreconditionError("cannot normalize an operator with non-positive trace")
        return self.scaled(1.0 / tr)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries.conj().T, self.entries)))

    def check_density(self, tol_trace: float = TRACE_TOL, tol_eig: float = EIG_TOL) -> None:
        """Raise ``PreconditionError`` unless this is a valid density operator."""
        if not self.is_hermitian():
            raise PreconditionError("density operator is not Hermitian")
        tr = self.trace()
        if abs(tr - 1.0) > tol_trace:
            raise PreconditionError(f"density operator trace {tr} differs from 1")
        lo = self.min_eigenvalue()
        if lo < -tol_eig:
            raise PreconditionError(f"density operator has eigenvalue {lo:.3e}")

    def is_density(self) -> bool:
        try:
            self.check_density()
        except PreconditionError:
            return False
        return True

    def padded(self, per_mode: Sequence[int]) -> "FockOperator":
        """Embed into (or crop to) larger/smaller per-mode cutoffs."""
        per_mode = tuple(per_mode)
        if len(per_mode) != self.n_modes:
            raise DimensionError("padding must keep the number of modes")
        t = self.tensor_view()
        out = np.zeros(per_mode * 2, dtype=np.complex128)
        keep = tuple(slice(0, min(a, b)) for a, b in zip(self.dims.per_mode, per_mode))
        out[keep * 2] = t[keep * 2]
        new = FockDims(per_mode)
        return FockOperator(new, out.reshape(new.total, new.total))


def _check_cutoff(d) -> int:
    if int(d) != d or d < 1:
        raise DimensionError(f"cutoff must be a positive integer, got {d}")
    return int(d)


def annihilation(d: int) -> FockOperator:
    d = _check_cutoff(d)
    return FockOperator(FockDims((d,)), np.diag(np.sqrt(np.arange(1, d)), k=1))


def creation(d: int) -> FockOperator:
    return annihilation(d).dagger()


def number(d: int) -> FockOperator:
    d = _check_cutoff(d)
    return FockOperator(FockDims((d,)), np.diag(np.arange(d, dtype=float)))


def identity(dims) -> FockOperator:
    dims = _as_dims(dims)
    return FockOperator(dims, np.eye(dims.total))


def basis_ket(n: int, d: int) -> np.ndarray:
    d = _check_cutoff(d)
    if not 0 <= n < d:
        raise DimensionError(f"level {n} outside cutoff {d}")
    v = np.zeros(d, dtype=np.complex128)
    v[n] = 1.0
    return v


def displacement_matrix(xi: complex, d: int, method: str = "laguerre") -> np.ndarray:
    """Dense d x d block of D(xi).

    ``laguerre`` gives the exact matrix elements of the infinite-dimensional
    operator (the associated-Laguerre closed form, evaluated by its three-term
    recursion). ``expm`` exponentiates the truncated generator instead; the two
    agree on low Fock levels only, since the truncated exponential is unitary
    on the cut space.
    """
    d = _check_cutoff(d)
    if method == "laguerre":
        return kernels.displacement_stack(np.array([xi]), d)[0]
    if method == "expm":
        a = annihilation(d).entries
        return expm(xi * a.conj().T - np.conj(xi) * a)
    raise ValueError(f"unknown method {method!r}")


def displacement(xi: complex, d: int, method: str = "laguerre") -> FockOperator:
    return FockOperator(FockDims((_check_cutoff(d),)), displacement_matrix(xi, d, method))


def tensor(*ops: FockOperator) -> FockOperator:
    if not ops:
        raise ValueError("tensor needs at least one operator")
    dims = ops[0].dims
    out = ops[0].entries
    for op in ops[1:]:
        out = np.kron(out, op.entries)
        dims = dims + op.dims
    return FockOperator(dims, out)


def partial_trace(rho: FockOperator, keep: Sequence[int]) -> FockOperator:
    """Reduced operator on the modes in ``keep`` (returned in ascending order)."""
    n = rho.n_modes
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise IndexError(f"mode indices {keep} out of range for {n} modes")
    if not keep:
        raise ValueError("keep must name at least one mode")
    t = rho.tensor_view()
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for m in range(n):
        if m not in keep:
            col[m] = row[m]
    out_idx = [row[m] for m in keep] + [col[m] for m in keep]
    reduced = np.einsum("".join(row + col) + "->" + "".join(out_idx), t)
    dims = FockDims(tuple(rho.dims.per_mode[m] for m in keep))
    return FockOperator(dims, reduced.reshape(dims.total, dims.total))


def apply_local(rho: FockOperator, op: np.ndarray, mode: int, right: np.ndarray | None = None) -> FockOperator:
    """``op`` acting on one mode from the left and ``right`` (default op^dagger) from the right.

    ``op`` may be rectangular (d_out x d_in); the mode's cutoff changes to d_out.
    """
    n = rho.n_modes
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n} modes")
    op = np.asarray(op, dtype=np.complex128)
    right = op.conj().T if right is None else np.asarray(right, dtype=np.complex128)
    t = rho.tensor_view()
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [mode])), 0, mode)
    t = np.moveaxis(np.tensordot(t, right, axes=([n + mode], [0])), -1, n + mode)
    per_mode = list(rho.dims.per_mode)
    per_mode[mode] = op.shape[0]
    dims = FockDims(tuple(per_mode))
    return FockOperator(dims, t.reshape(dims.total, dims.total))


def embed(op: np.ndarray, mode: int, dims) -> FockOperator:
    """Single-mode operator lifted to the full space (identity on other modes)."""
    dims = _as_dims(dims)
    mats = [np.eye(d) for d in dims.per_mode]
    mats[mode] = np.asarray(op, dtype=np.complex128)
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return FockOperator(dims, out)


def renormalize(rho: FockOperator, min_trace: float = MIN_RETAINED_TRACE) -> FockOperator:
    """Normalize after truncation, failing if the retained weight is too small."""
    tr = rho.trace().real
    if tr < min_trace:
        raise TruncationError(f"retained trace {tr:.4f} below {min_trace}")
    return rho.scaled(1.0 / tr)


def fidelity_pure(rho_in: FockOperator, rho_out: FockOperator) -> float:
    """tr(rho_in rho_out) for a pure ``rho_in``.

    Operators with different per-mode cutoffs are zero-padded to a common size.
    """
    if rho_in.n_modes != rho_out.n_modes:
        raise DimensionError("fidelity needs operators on the same modes")
    if rho_in.dims != rho_out.dims:
        common = tuple(max(a, b) for a, b in zip(rho_in.dims.per_mode, rho_out.dims.per_mode))
        rho_in, rho_out = rho_in.padded(common), rho_out.padded(common)
    if rho_in.purity() <= 1 - 1e-6:
        raise PreconditionError("fidelity_pure requires a pure reference state")
    # tr(AB) = sum_ij A_ij B_ji
    f = np.sum(rho_in.entries * rho_out.entries.T)
    if abs(f.imag) >= 1e-8:
        raise PreconditionError(f"fidelity has imaginary residue {f.imag:.2e}")
    return float(min(max(f.real, 0.0), 1.0))
