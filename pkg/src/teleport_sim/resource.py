"""Distributed TMSV resources: squeeze, optional operation, loss, optional operation.

Two builders produce the same ``ResourceBlocks``. The dense one forms the
full two-mode density operator. The windowed one keeps only the sender rows
an H-BSM can see, so it costs O(d^3) instead of O(d^6), and gets heralding
weights from photon-number distributions (every single-mode operation used
here has a number-diagonal O^dagger O).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bsm import ResourceBlocks
from .channel import ChannelSpec, apply_loss, binomial_loss_matrix, kraus_weights, loss_on_axis
from .fock import FockDims, FockOperator
from .nongauss import MIN_HERALD, HeraldingError, NgOpSpec, apply_ng, apply_ng_ket, local_gram_diag, local_matrix
from .states import StateSpec, tmsv_ket, truncation_dim


@dataclass(frozen=True)
class BuiltResource:
    blocks: ResourceBlocks
    p_operation: float
    resource_type: str
    cutoff: int


def tmsv_cutoff(r: float, extra: int = 0) -> int:
    return truncation_dim(StateSpec("tmsv", r=r)) + extra


def build_dense(r: float, channel: ChannelSpec, ng: NgOpSpec | None = None, d: int | None = None) -> tuple[FockOperator, float, str]:
    """Full density operator of the resource and its heralding weight."""
    d = tmsv_cutoff(r) if d is None else d
    rho = FockOperator.from_ket(tmsv_ket(r, d), FockDims((d, d)))
    p_op, rtype = 1.0, "phi"
    if ng is not None and ng.placement == "before":
        rho, p_op, rtype = apply_ng(rho, (0, 1), ng)
    rho = apply_loss(apply_loss(rho, 0, channel.t1), 1, channel.t2)
    if ng is not None and ng.placement == "after":
        rho, p_op, rtype = apply_ng(rho, (0, 1), ng)
    return rho, p_op, rtype


def build_resource_dense(r: float, channel: ChannelSpec, ng: NgOpSpec | None = None, d: int | None = None) -> BuiltResource:
    rho, p_op, rtype = build_dense(r, channel, ng, d)
    return BuiltResource(ResourceBlocks.from_operator(rho), p_op, rtype, rho.dims.per_mode[0])


@dataclass(frozen=True, eq=False)
class LossyWindow:
    """Sender rows 0..W-1 of a lossy two-mode state plus its joint photon statistics."""

    blocks: np.ndarray  # (W, W, d2, d2)
    photon_dist: np.ndarray  # (d1, d2)


def _window_from_ket(psi: np.ndarray, channel: ChannelSpec, window: int) -> LossyWindow:
    d1, d2 = psi.shape
    if d1 < window:
        psi = np.pad(psi, ((0, window - d1), (0, 0)))
        d1 = window
    w = kraus_weights(channel.t1, d1)  # w[l, n] = <n|G_l|n + l>
    # rows[y, l, :] = w[l, y] psi[y + l, :]
    rows = np.zeros((window, d1, d2), dtype=np.complex128)
    for y in range(window):
        rows[y, : d1 - y] = w[: d1 - y, y, None] * psi[y:]
    blocks = np.einsum("yla,zlb->yzab", rows, rows.conj(), optimize=True)
    blocks = loss_on_axis(blocks, (2, 3), channel.t2)
    dist = np.abs(psi) ** 2
    dist = binomial_loss_matrix(channel.t1, d1) @ dist @ binomial_loss_matrix(channel.t2, d2).T
    return LossyWindow(blocks, dist)


@lru_cache(maxsize=256)
def lossy_window(r: float, channel: ChannelSpec, before: NgOpSpec | None, d: int, window: int) -> tuple[LossyWindow, float]:
    """Cached sender window of the transmitted state; also returns the before-weight."""
    psi = tmsv_ket(r, d).reshape(d, d)
    p_op = 1.0
    if before is not None:
        psi, p_op = apply_ng_ket(psi, before)
    return _window_from_ket(psi, channel, window), p_op


def _after_op(win: LossyWindow, spec: NgOpSpec) -> tuple[np.ndarray, float]:
    blocks = win.blocks
    d1, d2 = win.photon_dist.shape
    s, r = spec.acts_on
    wdim = blocks.shape[0]
    if s:
        o1 = local_matrix(spec, wdim)[:2]
        blocks = np.einsum("ya,zb,abij->yzij", o1, o1.conj(), blocks, optimize=True)
    else:
        blocks = blocks[:2, :2]
    if r:
        o2 = local_matrix(spec, d2)
        blocks = np.einsum("ia,yzab,jb->yzij", o2, blocks, o2.conj(), optimize=True)
    g1 = local_gram_diag(spec, d1) if s else np.ones(d1)
    g2 = local_gram_diag(spec, d2) if r else np.ones(d2)
    weight = float(g1 @ win.photon_dist @ g2)
    if weight < MIN_HERALD:
        raise HeraldingError(f"heralding weight {weight:.3e} vanishes")
    return blocks, weight


def build_resource(r: float, channel: ChannelSpec, ng: NgOpSpec | None = None, d: int | None = None) -> BuiltResource:
    """Windowed resource builder; agrees with ``build_resource_dense``."""
    d = tmsv_cutoff(r) if d is None else d
    before = ng if ng is not None and ng.placement == "before" else None
    after = ng if ng is not None and ng.placement == "after" else None
    # subtraction after loss reads sender row 2 into the qubit window
    window = 3 if after is not None and after.kind == "symmetric-ps" and after.acts_on[0] else 2
    win, p_op = lossy_window(r, channel, before, d, window)
    rtype = ng.resource_type if ng is not None else "phi"
    if after is None:
        return BuiltResource(ResourceBlocks(np.ascontiguousarray(win.blocks[:2, :2]), 1.0), p_op, rtype, d)
    blocks, weight = _after_op(win, after)
    return BuiltResource(ResourceBlocks(np.ascontiguousarray(blocks), weight), weight, rtype, d)
