"""Heralded non-Gaussian operations on the two-mode resource.

Every operation maps rho to O rho O^dagger / P with P = tr{O rho O^dagger}.
Subtraction and addition use the bare ladder operators, so their heralding
weights are not probabilities and can exceed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .fock import DimensionError, FockDims, FockOperator, PreconditionError, apply_local
from .states import CUTOFF_CEILING

NgKind = Literal[
    "symmetric-ps",
    "symmetric-pa",
    "delocalized-ps",
    "delocalized-pa",
    "catalysis",
    "scissors",
]
NG_KINDS = ("symmetric-ps", "symmetric-pa", "delocalized-ps", "delocalized-pa", "catalysis", "scissors")
PLACEMENTS = ("before", "after")
TARGETS = ("both", "sender", "receiver")

MIN_HERALD = 1e-14


class HeraldingError(RuntimeError):
    """The heralding event has (numerically) zero probability."""


@dataclass(frozen=True)
class NgOpSpec:
    kind: NgKind
    placement: Literal["before", "after"] = "before"
    tc: float | None = None
    ts: float | None = None
    target: Literal["both", "sender", "receiver"] = "both"

    def __post_init__(self):
        if self.kind not in NG_KINDS:
            raise PreconditionError(f"unknown operation {self.kind!r}")
        if self.placement not in PLACEMENTS:
            raise PreconditionError(f"placement must be one of {PLACEMENTS}")
        if self.target not in TARGETS:
            raise PreconditionError(f"target must be one of {TARGETS}")
        if self.delocalized:
            if self.placement != "before":
                raise PreconditionError("delocalized operations only exist before transmission")
            if self.target != "both":
                raise PreconditionError("delocalized operations act on both modes")
        if self.kind == "scissors" and self.placement != "after":
            raise PreconditionError("quantum scissors is applied after transmission")
        if self.kind == "catalysis" and not (self.tc is not None and 0 < self.tc < 1):
            raise PreconditionError("catalysis needs tc in (0, 1)")
        if self.kind == "scissors" and not (self.ts is not None and 0 < self.ts < 1):
            raise PreconditionError("scissors needs ts in (0, 1)")

    @property
    def delocalized(self) -> bool:
        return self.kind.startswith("delocalized")

    @property
    def adds_photon(self) -> bool:
        return self.kind.endswith("-pa")

    @property
    def resource_type(self) -> str:
        return "psi" if self.delocalized else "phi"

    @property
    def acts_on(self) -> tuple[bool, bool]:
        """(sender, receiver) flags."""
        return self.target in ("both", "sender"), self.target in ("both", "receiver")

    def with_params(self, tc: float | None = None, ts: float | None = None) -> "NgOpSpec":
        return NgOpSpec(self.kind, self.placement, self.tc if tc is None else tc, self.ts if ts is None else ts, self.target)


def catalysis_op(tc: float, d: int) -> FockOperator:
    """Diagonal sqrt(tc) ((tc - 1)/tc n + 1) sqrt(tc)^n."""
    if not 0 < tc < 1:
        raise PreconditionError("tc must lie in (0, 1)")
    return FockOperator(FockDims((d,)), np.diag(catalysis_diag(tc, d)).astype(np.complex128))


def catalysis_diag(tc: float, d: int) -> np.ndarray:
    n = np.arange(d, dtype=float)
    return math.sqrt(tc) * ((tc - 1) / tc * n + 1) * tc ** (n / 2)


def scissors_op(ts: float, d: int) -> FockOperator:
    if not 0 < ts < 1:
        raise PreconditionError("ts must lie in (0, 1)")
    return FockOperator(FockDims((d,)), np.diag(scissors_diag(ts, d)).astype(np.complex128))


def scissors_diag(ts: float, d: int) -> np.ndarray:
    out = np.zeros(d)
    out[0] = math.sqrt(ts)
    if d > 1:
        out[1] = math.sqrt(1 - ts)
    return out


def local_matrix(spec: NgOpSpec, d: int) -> np.ndarray:
    """Single-mode factor of a non-delocalised operation, shape (d_out, d_in).

    Addition maps d levels into d + 1 so no amplitude is lost at the edge.
    """
    n = np.arange(1, d)
    if spec.kind == "symmetric-ps":
        m = np.zeros((d, d))
        m[n - 1, n] = np.sqrt(n)
        return m
    if spec.kind == "symmetric-pa":
        m = np.zeros((d + 1, d))
        k = np.arange(d)
        m[k + 1, k] = np.sqrt(k + 1)
        return m
    if spec.kind == "catalysis":
        return np.diag(catalysis_diag(spec.tc, d))
    if spec.kind == "scissors":
        return np.diag(scissors_diag(spec.ts, d))
    raise ValueError(f"{spec.kind} has no single-mode factor")


def local_gram_diag(spec: NgOpSpec, d: int) -> np.ndarray:
    """Diagonal of O^dagger O for a single-mode factor (all factors used here are number-diagonal)."""
    n = np.arange(d, dtype=float)
    if spec.kind == "symmetric-ps":
        return n
    if spec.kind == "symmetric-pa":
        return n + 1
    if spec.kind == "catalysis":
        return catalysis_diag(spec.tc, d) ** 2
    if spec.kind == "scissors":
        return scissors_diag(spec.ts, d) ** 2
    raise ValueError(f"{spec.kind} has no single-mode factor")


def _grown(d: int, spec: NgOpSpec, active: bool) -> int:
    if not (spec.adds_photon and active):
        return d
    if d + 1 > CUTOFF_CEILING:
        raise DimensionError(f"photon addition would exceed the cutoff ceiling of {CUTOFF_CEILING}")
    return d + 1


def apply_ng_ket(psi: np.ndarray, spec: NgOpSpec) -> tuple[np.ndarray, float]:
    """Apply the operation to a two-mode ket stored as a (d1, d2) amplitude array.

    Returns the normalised amplitude array and the heralding weight.
    """
    d1, d2 = psi.shape
    if spec.delocalized:
        if spec.adds_photon:
            e1, e2 = _grown(d1, spec, True), _grown(d2, spec, True)
            p = np.zeros((e1, e2), dtype=np.complex128)
            p[:d1, :d2] = psi
            up1 = np.sqrt(np.arange(1, e1))[:, None]
            up2 = np.sqrt(np.arange(1, e2))[None, :]
            out = np.zeros_like(p)
            out[1:, :] += up1 * p[:-1, :]
            out[:, 1:] += up2 * p[:, :-1]
        else:
            out = np.zeros_like(psi, dtype=np.complex128)
            down1 = np.sqrt(np.arange(1, d1))[:, None]
            down2 = np.sqrt(np.arange(1, d2))[None, :]
            out[:-1, :] += down1 * psi[1:, :]
            out[:, :-1] += down2 * psi[:, 1:]
        out = out / math.sqrt(2)
    else:
        s, r = spec.acts_on
        _grown(d1, spec, s), _grown(d2, spec, r)
        out = psi
        if s:
            out = local_matrix(spec, d1) @ out
        if r:
            out = out @ local_matrix(spec, d2).T
    weight = float(np.vdot(out, out).real)
    if weight < MIN_HERALD:
        raise HeraldingError(f"heralding weight {weight:.3e} vanishes")
    return out / math.sqrt(weight), weight


def apply_ng(rho: FockOperator, modes: tuple[int, int], spec: NgOpSpec) -> tuple[FockOperator, float, str]:
    """Heralded operation on modes (sender, receiver) of a density operator."""
    n = rho.n_modes
    m1, m2 = modes
    if m1 == m2 or not (0 <= m1 < n and 0 <= m2 < n):
        raise IndexError("operation modes must be two distinct valid modes")
    per = list(rho.dims.per_mode)
    s, r = spec.acts_on
    grown = list(per)
    grown[m1] = _grown(per[m1], spec, s)
    grown[m2] = _grown(per[m2], spec, r)
    rho = rho.padded(grown)
    if spec.delocalized:
        # (A1 + A2) rho (A1 + A2)^dagger / 2, one mode per side of each term
        ladder = {}
        for m in (m1, m2):
            a = np.diag(np.sqrt(np.arange(1, rho.dims.per_mode[m])), 1)
            ladder[m] = a.T if spec.adds_photon else a
        out = np.zeros_like(rho.entries)
        for left in (m1, m2):
            for right in (m1, m2):
                d_l, d_r = rho.dims.per_mode[left], rho.dims.per_mode[right]
                term = apply_local(rho, ladder[left], left, right=np.eye(d_l))
                term = apply_local(term, np.eye(d_r), right, right=ladder[right].conj().T)
                out = out + term.entries
        out = 0.5 * out
    else:
        cur = rho
        for m, on in ((m1, s), (m2, r)):
            if on:
                d = cur.dims.per_mode[m]
                mat = local_matrix(spec, d - 1 if spec.adds_photon else d)
                if spec.adds_photon:
                    mat = np.pad(mat, ((0, 0), (0, 1)))
                cur = apply_local(cur, mat, m)
        out = cur.entries
    weight = float(np.real(np.trace(out)))
    if weight < MIN_HERALD:
        raise HeraldingError(f"heralding weight {weight:.3e} vanishes")
    return FockOperator(rho.dims, out / weight), weight, spec.resource_type
