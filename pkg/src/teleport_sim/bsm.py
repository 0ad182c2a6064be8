"""Hybrid Bell-state measurement (H-BSM) teleportation.

The measurement projects the input mode and the sender's resource mode onto
the Bell states of their {|0>, |1>} sectors. A Pauli-type correction on the
receiver's mode then finishes the protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .fock import (
    DimensionError,
    FockDims,
    FockOperator,
    PreconditionError,
    fidelity_pure,
    partial_trace,
)
from .states import BELL_KINDS, bell_vector

ResourceType = Literal["phi", "psi"]

COMPLETE_OUTCOMES = BELL_KINDS
INCOMPLETE_OUTCOMES = ("psi+", "psi-")


class NoOutcomeError(RuntimeError):
    """The measurement succeeds with (numerically) zero probability."""


def _pauli(label: str) -> np.ndarray:
    table = {
        "i": np.eye(2),
        "x": np.array([[0, 1], [1, 0]]),
        "z": np.diag([1, -1]),
    }
    return table[label].astype(np.complex128)


_CORRECTION = {
    "phi+": _pauli("i"),
    "phi-": _pauli("z"),
    "psi+": _pauli("x"),
    "psi-": _pauli("z") @ _pauli("x"),
}

_CORRECTION_LABEL = {"phi+": "I", "phi-": "Z", "psi+": "X", "psi-": "ZX"}


def correction_unitary(outcome: str, resource_type: ResourceType = "phi", d: int = 2) -> FockOperator:
    """Pauli block on span{|0>, |1>}, identity on higher levels.

    A psi-like resource is the phi-like one with a flip on the receiver's
    mode, so its corrections compose an extra X first.
    """
    if d < 2:
        raise DimensionError("correction needs at least two levels")
    block = _CORRECTION[outcome]
    if resource_type == "psi":
        block = block @ _pauli("x")
    elif resource_type != "phi":
        raise ValueError(f"unknown resource type {resource_type!r}")
    u = np.eye(d, dtype=np.complex128)
    u[:2, :2] = block
    return FockOperator(FockDims((d,)), u)


def correction_label(outcome: str, resource_type: ResourceType = "phi") -> str:
    label = _CORRECTION_LABEL[outcome]
    return label + "X" if resource_type == "psi" else label


def bell_projectors(complete: bool, d1: int, d3: int) -> list[tuple[str, FockOperator]]:
    """Bell projectors padded into a (d1, d3) two-mode space, plus the failure element."""
    if d1 < 2 or d3 < 2:
        raise DimensionError("Bell projectors need cutoffs of at least 2")
    dims = FockDims((d1, d3))
    labels = COMPLETE_OUTCOMES if complete else INCOMPLETE_OUTCOMES
    out = []
    total = np.zeros((dims.total, dims.total), dtype=np.complex128)
    for label in labels:
        v = np.zeros((d1, d3), dtype=np.complex128)
        v[:2, :2] = bell_vector(label).reshape(2, 2)
        p = np.outer(v.ravel(), v.ravel().conj())
        total += p
        out.append((label, FockOperator(dims, p)))
    out.append(("fail", FockOperator(dims, np.eye(dims.total) - total)))
    return out


@dataclass(frozen=True)
class HbsmOutcome:
    label: str
    probability: float
    state: FockOperator | None
    correction: str
    fidelity: float


@dataclass(frozen=True)
class ProtocolResult:
    outcomes: list[HbsmOutcome]
    p_bsm: float
    p_operation: float = 1.0
    f_bar: float = 0.0
    average_state: FockOperator | None = field(default=None, repr=False)

    @property
    def p_total(self) -> float:
        return self.p_bsm * self.p_operation


def _correct(unnorm: np.ndarray, dims: FockDims, output_pos: int, label: str, resource_type: ResourceType) -> np.ndarray:
    n = dims.n_modes
    u = correction_unitary(label, resource_type, dims.per_mode[output_pos]).entries
    t = unnorm.reshape(dims.per_mode * 2)
    t = np.moveaxis(np.tensordot(u, t, axes=([1], [output_pos])), 0, output_pos)
    t = np.moveaxis(np.tensordot(t, u.conj().T, axes=([n + output_pos], [0])), -1, n + output_pos)
    return t.reshape(dims.total, dims.total)


def _aggregate(
    branches: Sequence[tuple[str, np.ndarray]],
    dims: FockDims,
    target: FockOperator,
    resource_type: ResourceType,
    p_operation: float,
) -> ProtocolResult:
    """Outcome statistics from corrected, unnormalised branch operators."""
    outcomes = []
    p_bsm = 0.0
    weighted = 0.0
    avg = np.zeros((dims.total, dims.total), dtype=np.complex128)
    for label, corrected in branches:
        p = float(np.real(np.trace(corrected)))
        if p <= 1e-300:
            outcomes.append(HbsmOutcome(label, 0.0, None, correction_label(label, resource_type), 0.0))
            continue
        state = FockOperator(dims, corrected / p)
        f = fidelity_pure(target, state)
        outcomes.append(HbsmOutcome(label, p, state, correction_label(label, resource_type), f))
        p_bsm += p
        weighted += p * f
        avg += corrected
    if p_bsm < 1e-12:
        raise NoOutcomeError(f"H-BSM success probability {p_bsm:.3e} is zero")
    return ProtocolResult(
        outcomes=outcomes,
        p_bsm=p_bsm,
        p_operation=p_operation,
        f_bar=min(max(weighted / p_bsm, 0.0), 1.0),
        average_state=FockOperator(dims, avg / p_bsm),
    )


def hbsm_teleport(
    rho_joint: FockOperator,
    input_mode: int,
    resource_modes: tuple[int, int],
    resource_type: ResourceType = "phi",
    complete: bool = True,
    target: FockOperator | None = None,
    p_operation: float = 1.0,
) -> ProtocolResult:
    """Generic H-BSM on a dense joint operator.

    ``resource_modes`` is (measured, output). Modes outside the resource are
    the input modes; the output state is returned on those modes with the
    output mode taking the input mode's place. ``target`` defaults to the
    reduced input state (exact when input and resource are a product).
    """
    n = rho_joint.n_modes
    measured, output = resource_modes
    if len({input_mode, measured, output}) != 3 or not all(0 <= m < n for m in (input_mode, measured, output)):
        raise IndexError("input, measured and output modes must be distinct valid modes")
    per = rho_joint.dims.per_mode
    if per[input_mode] < 2 or per[measured] < 2:
        raise DimensionError("measured modes need cutoffs of at least 2")
    input_modes = [m for m in range(n) if m not in resource_modes]
    if target is None:
        target = partial_trace(rho_joint, input_modes)
    rest = [m for m in range(n) if m not in (input_mode, measured)]
    # reorder remaining modes so they line up with input_modes
    order = [rest.index(output if m == input_mode else m) for m in input_modes]
    out_dims = FockDims(tuple(per[rest[k]] for k in order))
    output_pos = input_modes.index(input_mode)

    t = rho_joint.tensor_view()
    # keep only the qubit sector of the two measured modes
    ket_sl = [slice(None)] * n
    ket_sl[input_mode] = slice(0, 2)
    ket_sl[measured] = slice(0, 2)
    t = t[tuple(ket_sl + ket_sl)]
    m = len(rest)
    labels = COMPLETE_OUTCOMES if complete else INCOMPLETE_OUTCOMES
    branches = []
    for label in labels:
        b = bell_vector(label).reshape(2, 2)
        tt = np.moveaxis(t, (input_mode, measured, n + input_mode, n + measured), (0, 1, 2, 3))
        proj = np.einsum("xy,xyXY...,XY->...", b.conj(), tt, b)
        proj = np.transpose(proj, order + [m + k for k in order])
        unnorm = proj.reshape(out_dims.total, out_dims.total)
        branches.append((label, _correct(unnorm, out_dims, output_pos, label, resource_type)))
    return _aggregate(branches, out_dims, target, resource_type, p_operation)


@dataclass(frozen=True, eq=False)
class ResourceBlocks:
    """Receiver-mode operators <y| rho_res |y'>_sender for y, y' in {0, 1}.

    This is all of a two-mode resource that an H-BSM ever reads. ``norm`` is
    tr(rho_res); blocks are stored unnormalised.
    """

    blocks: np.ndarray  # shape (2, 2, d, d)
    norm: float = 1.0

    @classmethod
    def from_operator(cls, rho: FockOperator) -> "ResourceBlocks":
        if rho.n_modes != 2:
            raise DimensionError("resource must have two modes")
        d1, d2 = rho.dims.per_mode
        t = rho.tensor_view()
        if d1 < 2:
            t = np.pad(t, ((0, 2 - d1), (0, 0), (0, 2 - d1), (0, 0)))
        return cls(np.ascontiguousarray(np.transpose(t[:2, :, :2, :], (0, 2, 1, 3))), rho.trace().real)

    @property
    def d_out(self) -> int:
        return self.blocks.shape[-1]


def hbsm_branches(
    rho_in: FockOperator,
    input_mode: int,
    resource: ResourceBlocks,
    resource_type: ResourceType = "phi",
    complete: bool = True,
) -> tuple[FockDims, list[tuple[str, np.ndarray]]]:
    """Corrected, unnormalised output operators for each kept outcome.

    Linear in ``rho_in``, which may be any operator (not only a state); the
    output lives on the input's modes with the receiver mode in place of
    ``input_mode``.
    """
    if rho_in.n_modes not in (1, 2):
        raise DimensionError("input must have one or two modes")
    if not 0 <= input_mode < rho_in.n_modes:
        raise IndexError("input mode out of range")
    d_out = max(resource.d_out, 2)
    r = resource.blocks / resource.norm
    if resource.d_out < 2:
        r = np.pad(r, ((0, 0), (0, 0), (0, 2 - resource.d_out), (0, 2 - resource.d_out)))
    per = list(rho_in.dims.per_mode)
    t = rho_in.padded([max(d, 2) if i == input_mode else d for i, d in enumerate(per)]).tensor_view()
    if rho_in.n_modes == 1:
        a = t[:2, :2][:, :, None, None]  # trivial spectator
        dims = FockDims((d_out,))
    else:
        spec_mode = 1 - input_mode
        if input_mode == 0:
            a = np.transpose(t[:2, :, :2, :], (0, 2, 1, 3))
        else:
            a = np.transpose(t[:, :2, :, :2], (1, 3, 0, 2))
        per_out = [0, 0]
        per_out[input_mode] = d_out
        per_out[spec_mode] = per[spec_mode]
        dims = FockDims(tuple(per_out))
    output_pos = 0 if rho_in.n_modes == 1 else input_mode
    labels = COMPLETE_OUTCOMES if complete else INCOMPLETE_OUTCOMES
    branches = []
    for label in labels:
        b = bell_vector(label).reshape(2, 2)
        coef = np.einsum("xy,XY->xXyY", b.conj(), b)
        # out[s, o, s', o'] = sum coef[x, x', y, y'] a[x, x', s, s'] r[y, y', o, o']
        out = np.einsum("xXyY,xXab,yYcd->acbd", coef, a, r, optimize=True)
        if rho_in.n_modes == 1:
            mat = out.reshape(d_out, d_out)
        elif input_mode == 1:
            mat = out.reshape(dims.total, dims.total)
        else:
            mat = np.transpose(out, (1, 0, 3, 2)).reshape(dims.total, dims.total)
        branches.append((label, _correct(mat, dims, output_pos, label, resource_type)))
    return dims, branches


def hbsm_teleport_product(
    rho_in: FockOperator,
    input_mode: int,
    resource: ResourceBlocks,
    resource_type: ResourceType = "phi",
    complete: bool = True,
    p_operation: float = 1.0,
) -> ProtocolResult:
    """H-BSM for a product input (x) resource without forming the joint operator."""
    dims, branches = hbsm_branches(rho_in, input_mode, resource, resource_type, complete)
    return _aggregate(branches, dims, rho_in, resource_type, p_operation)


def check_projector_set(projectors: list[tuple[str, FockOperator]], tol: float = 1e-10) -> None:
    """Completeness and positivity of a projector set (failure element included)."""
    total = sum(p.entries for _, p in projectors)
    if np.max(np.abs(total - np.eye(total.shape[0]))) > tol:
        raise PreconditionError("projectors do not sum to identity")
    for label, p in projectors:
        if p.min_eigenvalue() < -tol:
            raise PreconditionError(f"element {label} is not positive semidefinite")
