"""Constructors for the input and resource states, plus the truncation policy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import gammaln

from .fock import DimensionError, FockDims, FockOperator, PreconditionError

CUTOFF_CEILING = 40
RETAINED_TRACE = 0.95


class DegenerateStateError(PreconditionError):
    """The requested state has zero norm (e.g. an odd cat at alpha = 0)."""


@dataclass(frozen=True)
class CatQubitParams:
    theta: float
    phi: float
    alpha: float

    def __post_init__(self):
        if not 0 <= self.theta <= math.pi + 1e-12:
            raise PreconditionError(f"theta={self.theta} outside [0, pi]")
        if self.alpha < 0:
            raise PreconditionError("alpha is taken real and non-negative")


@dataclass(frozen=True)
class TmsvParams:
    r: float

    def __post_init__(self):
        if self.r < 0:
            raise PreconditionError("squeezing r must be non-negative")

    @property
    def lam(self) -> float:
        return math.tanh(self.r)


StateKind = Literal["coherent", "number", "cat", "cv_qubit", "hybrid", "tmsv", "vacuum"]


@dataclass(frozen=True)
class StateSpec:
    """Symbolic description of a state before it is realised on a cutoff."""

    kind: StateKind
    alpha: float = 0.0
    parity: int = 1
    theta: float = 0.0
    phi: float = 0.0
    r: float = 0.0
    n: int = 0


def _poisson_amplitudes(alpha: complex, d: int) -> np.ndarray:
    n = np.arange(d)
    if alpha == 0:
        out = np.zeros(d, dtype=np.complex128)
        out[0] = 1.0
        return out
    mag = np.exp(n * np.log(abs(alpha)) - 0.5 * abs(alpha) ** 2 - 0.5 * gammaln(n + 1))
    return mag * np.exp(1j * np.angle(alpha) * n)


def coherent_ket(alpha: complex, d: int) -> np.ndarray:
    """Untruncated coherent amplitudes on levels 0..d-1 (not renormalised)."""
    return _poisson_amplitudes(alpha, d)


def number_ket(n: int, d: int) -> np.ndarray:
    if not 0 <= n < d:
        raise DimensionError(f"|{n}> does not fit cutoff {d}")
    v = np.zeros(d, dtype=np.complex128)
    v[n] = 1.0
    return v


def cat_ket(alpha: float, parity: int, d: int) -> np.ndarray:
    """(|alpha> + parity |-alpha>) restricted to d levels, normalised there."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    if parity == -1 and alpha == 0:
        raise DegenerateStateError("odd cat state is undefined at alpha = 0")
    if d < 1 or (parity == -1 and d < 2):
        raise DimensionError(f"cutoff {d} too small for a cat of parity {parity}")
    amps = _poisson_amplitudes(alpha, d)
    n = np.arange(d)
    # odd (even) cat keeps only odd (even) Fock levels
    keep = (n % 2 == 0) if parity == 1 else (n % 2 == 1)
    v = np.where(keep, amps, 0.0)
    return v / np.linalg.norm(v)


def cat_state(alpha: float, parity: int, d: int) -> FockOperator:
    return FockOperator.from_ket(cat_ket(alpha, parity, d))


def cv_qubit_ket(p: CatQubitParams, d: int) -> np.ndarray:
    minus = cat_ket(p.alpha, -1, d)
    plus = cat_ket(p.alpha, 1, d)
    return math.cos(p.theta / 2) * minus + np.exp(1j * p.phi) * math.sin(p.theta / 2) * plus


def cv_qubit(p: CatQubitParams, d: int) -> FockOperator:
    return FockOperator.from_ket(cv_qubit_ket(p, d))


def hybrid_ket(alpha: float, d: int) -> np.ndarray:
    """(|cat_-> |0> + |cat_+> |1>) / sqrt(2) with mode order (CV, DV)."""
    if alpha <= 0:
        raise DegenerateStateError("hybrid state needs alpha > 0")
    psi = np.zeros((d, 2), dtype=np.complex128)
    psi[:, 0] = cat_ket(alpha, -1, d)
    psi[:, 1] = cat_ket(alpha, 1, d)
    return psi.ravel() / math.sqrt(2)


def hybrid_state(alpha: float, d: int) -> FockOperator:
    return FockOperator.from_ket(hybrid_ket(alpha, d), FockDims((d, 2)))


def tmsv_schmidt(lam: float, d: int, normalize: bool = True) -> np.ndarray:
    """Coefficients sqrt(1 - lam^2) lam^n for n < d."""
    if not 0 <= lam < 1:
        raise PreconditionError("lambda must lie in [0, 1)")
    c = math.sqrt(1 - lam**2) * lam ** np.arange(d, dtype=float)
    if normalize:
        c = c / np.linalg.norm(c)
    return c


def tmsv_ket(p: TmsvParams | float, d: int, normalize: bool = True) -> np.ndarray:
    lam = p.lam if isinstance(p, TmsvParams) else math.tanh(p)
    c = tmsv_schmidt(lam, d, normalize)
    return np.diag(c).astype(np.complex128).ravel()


def tmsv(p: TmsvParams | float, d: int) -> FockOperator:
    return FockOperator.from_ket(tmsv_ket(p, d), FockDims((d, d)))


BELL_KINDS = ("phi+", "phi-", "psi+", "psi-")


def bell_vector(kind: str) -> np.ndarray:
    """Bell vector on two qubits, basis order |00>, |01>, |10>, |11>."""
    s = 1 / math.sqrt(2)
    table = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    try:
        return np.array(table[kind], dtype=np.complex128)
    except KeyError:
        raise ValueError(f"unknown Bell state {kind!r}") from None


def bell_state(kind: str) -> FockOperator:
    return FockOperator.from_ket(bell_vector(kind), FockDims((2, 2)))


def photon_distribution(spec: StateSpec, n_max: int) -> np.ndarray:
    """Untruncated photon-number probabilities p_0..p_{n_max-1}.

    For two-mode states this is the distribution of either (single) mode.
    """
    n = np.arange(n_max)
    if spec.kind == "vacuum":
        return (n == 0).astype(float)
    if spec.kind == "number":
        return (n == spec.n).astype(float)
    if spec.kind == "coherent":
        return np.abs(_poisson_amplitudes(spec.alpha, n_max)) ** 2
    if spec.kind == "tmsv":
        lam2 = math.tanh(spec.r) ** 2
        return (1 - lam2) * lam2**n
    poisson = np.abs(_poisson_amplitudes(spec.alpha, n_max)) ** 2
    if spec.kind in ("cat", "cv_qubit", "hybrid") and spec.alpha == 0:
        if spec.kind == "cat" and spec.parity == 1:
            return (n == 0).astype(float)
        raise DegenerateStateError("odd cat component at alpha = 0")
    x = 2 * spec.alpha**2
    even = np.where(n % 2 == 0, poisson, 0.0) * 2 / (1 + math.exp(-x))
    odd = np.where(n % 2 == 1, poisson, 0.0) * 2 / (1 - math.exp(-x))
    if spec.kind == "cat":
        return even if spec.parity == 1 else odd
    if spec.kind == "cv_qubit":
        c2 = math.cos(spec.theta / 2) ** 2
        return c2 * odd + (1 - c2) * even
    raise ValueError(f"no single distribution for {spec.kind}")


def truncation_dim(spec: StateSpec, threshold: float = RETAINED_TRACE) -> int:
    """Smallest cutoff whose retained trace exceeds ``threshold``.

    Cat-encoded inputs (``cv_qubit`` and ``hybrid``) are truncated so that
    both cat components individually retain the threshold, which makes the
    cutoff independent of theta and phi.
    """
    if spec.kind in ("cv_qubit", "hybrid"):
        if spec.alpha == 0:
            raise DegenerateStateError("cat components need alpha > 0")
        return max(
            truncation_dim(StateSpec("cat", alpha=spec.alpha, parity=1), threshold),
            truncation_dim(StateSpec("cat", alpha=spec.alpha, parity=-1), threshold),
        )
    p = photon_distribution(spec, CUTOFF_CEILING + 1)
    cum = np.cumsum(p)
    hits = np.nonzero(cum > threshold)[0]
    if hits.size == 0 or hits[0] + 1 > CUTOFF_CEILING:
        raise DimensionError(
            f"cutoff for {spec} exceeds the ceiling of {CUTOFF_CEILING} levels"
        )
    return int(hits[0]) + 1
