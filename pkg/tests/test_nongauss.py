import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from teleport_sim.channel import apply_loss
from teleport_sim.fock import DimensionError, FockDims, FockOperator, PreconditionError
from teleport_sim.nongauss import (
    HeraldingError,
    NgOpSpec,
    apply_ng,
    apply_ng_ket,
    catalysis_op,
    scissors_op,
)
from teleport_sim.states import tmsv_ket


def _tmsv(lam, d, normalize=True):
    return FockOperator.from_ket(tmsv_ket(math.atanh(lam), d, normalize), FockDims((d, d)))


def test_spec_invariants():
    with pytest.raises(PreconditionError):
        NgOpSpec("delocalized-ps", "after")
    with pytest.raises(PreconditionError):
        NgOpSpec("scissors", "before", ts=0.5)
    with pytest.raises(PreconditionError):
        NgOpSpec("catalysis", tc=1.0)
    with pytest.raises(PreconditionError):
        NgOpSpec("delocalized-pa", target="sender")
    assert NgOpSpec("delocalized-pa").resource_type == "psi"
    assert NgOpSpec("symmetric-ps").resource_type == "phi"


@pytest.mark.parametrize("lam", [0.2, 0.5, 0.7])
def test_symmetric_ps_heralding_weight(lam):
    rho = _tmsv(lam, 39, normalize=False)
    _, p, _ = apply_ng(rho, (0, 1), NgOpSpec("symmetric-ps"))
    # the weight is relative to the (nearly one) trace of the truncated input
    expected = lam**2 * (1 + lam**2) / (1 - lam**2) ** 2
    assert p == pytest.approx(expected, rel=1e-8)


def test_delocalized_ps_weight_and_state():
    lam, d = 0.4, 30
    rho = _tmsv(lam, d, normalize=False)
    out, p, rtype = apply_ng(rho, (0, 1), NgOpSpec("delocalized-ps"))
    assert p == pytest.approx(lam**2 / (1 - lam**2), rel=1e-10)
    assert rtype == "psi"
    v = np.zeros((d, d))
    for n in range(1, d):
        v[n - 1, n] = v[n, n - 1] = lam**n * math.sqrt(n)
    v = v.ravel() / np.linalg.norm(v)
    assert np.allclose(out.entries, np.outer(v, v), atol=1e-12)


def test_delocalized_pa_matches_shifted_ps():
    # (a1^+ + a2^+) TMSV_d is proportional to (a1 + a2) TMSV_{d+1}
    lam, d = 0.5, 12
    pa = apply_ng(_tmsv(lam, d), (0, 1), NgOpSpec("delocalized-pa"))[0]
    ps = apply_ng(_tmsv(lam, d + 1), (0, 1), NgOpSpec("delocalized-ps"))[0]
    assert np.allclose(pa.entries, ps.entries, atol=1e-12)


def test_photon_addition_grows_cutoff():
    out, _, _ = apply_ng(_tmsv(0.3, 5), (0, 1), NgOpSpec("symmetric-pa"))
    assert out.dims.per_mode == (6, 6)
    with pytest.raises(DimensionError):
        apply_ng(_tmsv(0.3, 40), (0, 1), NgOpSpec("symmetric-pa"))


def test_catalysis_entries():
    tc = 0.3
    diag = np.diag(catalysis_op(tc, 4).entries).real
    assert diag[0] == pytest.approx(math.sqrt(tc))
    assert diag[1] == pytest.approx(2 * tc - 1)
    near_one = np.diag(catalysis_op(1 - 1e-9, 6).entries).real
    assert np.allclose(near_one, 1, atol=1e-7)


def test_scissors_action():
    ts = 0.3
    m = scissors_op(ts, 4).entries
    c = np.array([0.6, 0.8, 0, 0])
    out = m @ c
    assert np.allclose(out[:2], [math.sqrt(ts) * 0.6, math.sqrt(1 - ts) * 0.8])
    assert np.allclose(out[2:], 0)
    assert np.vdot(out, out).real == pytest.approx(ts * 0.36 + (1 - ts) * 0.64)


def test_scissors_on_two_photons_cannot_herald():
    psi = np.zeros((3, 3), dtype=complex)
    psi[2, 2] = 1
    with pytest.raises(HeraldingError):
        apply_ng_ket(psi, NgOpSpec("scissors", "after", ts=0.5))


def test_scissors_output_support():
    rho = _tmsv(0.6, 8)
    out, _, _ = apply_ng(rho, (0, 1), NgOpSpec("scissors", "after", ts=0.4))
    t = out.tensor_view()
    assert np.allclose(t[2:], 0) and np.allclose(t[:, 2:], 0)


@given(st.floats(0.05, 0.99), st.floats(0.1, 0.8))
def test_ps_commutes_with_loss(t, lam):
    rho = _tmsv(lam, 10)
    spec = NgOpSpec("symmetric-ps")
    a = apply_ng(apply_loss(apply_loss(rho, 0, t), 1, t), (0, 1), spec)[0]
    b = apply_loss(apply_loss(apply_ng(rho, (0, 1), spec)[0], 0, t), 1, t)
    assert np.allclose(a.entries, b.entries, atol=1e-10)


@pytest.mark.parametrize(
    "spec",
    [
        NgOpSpec("symmetric-ps"),
        NgOpSpec("symmetric-pa"),
        NgOpSpec("delocalized-ps"),
        NgOpSpec("delocalized-pa"),
        NgOpSpec("catalysis", "after", tc=0.4, target="receiver"),
        NgOpSpec("scissors", "after", ts=0.6, target="sender"),
    ],
)
def test_outputs_are_states_and_ket_route_agrees(spec):
    rho = _tmsv(0.5, 8)
    out, p, _ = apply_ng(rho, (0, 1), spec)
    out.check_density()
    assert p >= 0
    psi, p2 = apply_ng_ket(tmsv_ket(math.atanh(0.5), 8).reshape(8, 8), spec)
    assert p2 == pytest.approx(p, rel=1e-12)
    assert np.allclose(out.entries, np.outer(psi.ravel(), psi.ravel().conj()), atol=1e-12)
