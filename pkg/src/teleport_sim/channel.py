"""Pure-loss bosonic channel in Kraus form and decibel conversions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock import FockDims, FockOperator, PreconditionError


@dataclass(frozen=True)
class ChannelSpec:
    """Transmissivities of the sender-side (t1) and receiver-side (t2) channels."""

    t1: float = 1.0
    t2: float = 1.0

    def __post_init__(self):
        for t in (self.t1, self.t2):
            _check_t(t)

    @classmethod
    def from_db(cls, total_loss_db: float = 0.0, t1_db: float | None = None, t2_db: float | None = None) -> "ChannelSpec":
        """Split ``total_loss_db`` evenly unless per-channel losses are given."""
        if t1_db is None and t2_db is None:
            t1_db = t2_db = total_loss_db / 2
        elif t1_db is None:
            t1_db = total_loss_db - t2_db
        elif t2_db is None:
            t2_db = total_loss_db - t1_db
        return cls(db_to_transmissivity(t1_db), db_to_transmissivity(t2_db))

    @property
    def total_loss_db(self) -> float:
        return transmissivity_to_db(self.t1) + transmissivity_to_db(self.t2)

    @property
    def product(self) -> float:
        return self.t1 * self.t2


def _check_t(t: float) -> float:
    if not 0 < t <= 1:
        raise PreconditionError(f"transmissivity must lie in (0, 1], got {t}")
    return float(t)


def db_to_transmissivity(loss_db: float) -> float:
    if loss_db < 0:
        raise PreconditionError("loss in dB must be non-negative")
    return 10.0 ** (-loss_db / 10.0)


def transmissivity_to_db(t: float) -> float:
    return -10.0 * math.log10(_check_t(t))


def squeeze_db_to_r(r_db: float) -> float:
    """r from r[dB] = -10 log10(exp(-2 r))."""
    if r_db < 0:
        raise PreconditionError("squeezing in dB must be non-negative")
    return r_db * math.log(10) / 20.0


def r_to_squeeze_db(r: float) -> float:
    return 20.0 * r / math.log(10)


def kraus_weights(t: float, d: int) -> np.ndarray:
    """w[l, n] = <n| G_l |n + l>, zero where n + l >= d.

    G_l |n + l> = sqrt(C(n + l, l)) t^(n / 2) (1 - t)^(l / 2) |n>.
    """
    t = _check_t(t)
    l = np.arange(d)[:, None]
    n = np.arange(d)[None, :]
    valid = (n + l) < d
    if t == 1.0:
        return np.where((l == 0) & valid, 1.0, 0.0)
    with np.errstate(divide="ignore"):
        logw = 0.5 * (gammaln(n + l + 1) - gammaln(n + 1) - gammaln(l + 1)) + 0.5 * n * math.log(t) + 0.5 * l * math.log1p(-t)
    return np.where(valid, np.exp(logw), 0.0)


def kraus_set(t: float, d: int) -> list[FockOperator]:
    """The d Kraus operators G_0..G_{d-1} on a single mode of cutoff d."""
    w = kraus_weights(t, d)
    ops = []
    for l in range(d):
        g = np.zeros((d, d))
        n = np.arange(d - l)
        g[n, n + l] = w[l, : d - l]
        ops.append(FockOperator(FockDims((d,)), g))
    return ops


def loss_on_axis(t_arr: np.ndarray, axes: tuple[int, int], t: float) -> np.ndarray:
    """Apply loss to the mode whose ket/bra indices are ``axes`` of a tensor.

    Uses the shift structure of the Kraus operators: each G_l maps level
    n + l to n, so the sum over l is a sum of weighted shifted slices.
    """
    ka, ba = axes
    d = t_arr.shape[ka]
    if t_arr.shape[ba] != d:
        raise ValueError("ket and bra cutoffs differ on the lossy mode")
    w = kraus_weights(t, d)
    moved = np.moveaxis(t_arr, (ka, ba), (-2, -1))
    out = np.zeros_like(moved)
    for l in range(d):
        m = d - l
        wl = w[l, :m]
        out[..., :m, :m] += wl[:, None] * wl[None, :] * moved[..., l:, l:]
    return np.moveaxis(out, (-2, -1), (ka, ba))


def apply_loss(rho: FockOperator, mode: int, t: float) -> FockOperator:
    """Pure-loss channel of transmissivity ``t`` on one mode of ``rho``."""
    n = rho.n_modes
    if not 0 <= mode < n:
        raise IndexError(f"mode {mode} out of range for {n} modes")
    out = loss_on_axis(rho.tensor_view(), (mode, n + mode), t)
    return FockOperator(rho.dims, out.reshape(rho.entries.shape))


def apply_kraus_dense(rho: FockOperator, mode: int, t: float) -> FockOperator:
    """Reference implementation: explicit sum of embedded G rho G^dagger."""
    from .fock import embed

    d = rho.dims.per_mode[mode]
    out = np.zeros_like(rho.entries)
    for g in kraus_set(t, d):
        big = embed(g.entries, mode, rho.dims).entries
        out += big @ rho.entries @ big.conj().T
    return FockOperator(rho.dims, out)


def binomial_loss_matrix(t: float, d: int) -> np.ndarray:
    """B[n, k] = P(n photons survive | k sent), for photon-number distributions."""
    w = kraus_weights(t, d)
    out = np.zeros((d, d))
    for l in range(d):
        n = np.arange(d - l)
        out[n, n + l] = w[l, : d - l] ** 2
    return out
