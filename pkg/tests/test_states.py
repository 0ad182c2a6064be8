import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from teleport_sim.fock import DimensionError
from teleport_sim.states import (
    CUTOFF_CEILING,
    BELL_KINDS,
    CatQubitParams,
    StateSpec,
    bell_state,
    bell_vector,
    cat_ket,
    coherent_ket,
    cv_qubit_ket,
    hybrid_state,
    tmsv_ket,
    tmsv_schmidt,
    truncation_dim,
)


@given(st.floats(0.2, 2.5))
def test_cat_parity_and_orthogonality(alpha):
    d = 40
    even, odd = cat_ket(alpha, 1, d), cat_ket(alpha, -1, d)
    assert np.allclose(even[1::2], 0)
    assert np.allclose(odd[0::2], 0)
    assert abs(np.vdot(even, odd)) < 1e-14
    assert math.isclose(np.linalg.norm(even), 1.0, rel_tol=1e-12)


def test_cat_norm_against_closed_form():
    # unnormalised (|a> + |-a>) has squared norm 2 (1 + exp(-2 a^2))
    a = 1.1
    v = coherent_ket(a, 60) + coherent_ket(-a, 60)
    assert math.isclose(np.vdot(v, v).real, 2 * (1 + math.exp(-2 * a * a)), rel_tol=1e-12)


def test_cv_qubit_limits():
    d = 20
    assert np.allclose(cv_qubit_ket(CatQubitParams(0.0, 0.0, 0.8), d), cat_ket(0.8, -1, d))
    assert np.allclose(cv_qubit_ket(CatQubitParams(math.pi, 0.0, 0.8), d), cat_ket(0.8, 1, d))


def test_tmsv_schmidt_coefficients():
    lam = 0.6
    s = tmsv_schmidt(lam, 12, normalize=False)
    expected = math.sqrt(1 - lam**2) * lam ** np.arange(12)
    assert np.allclose(s, expected, atol=1e-12)
    assert np.all(np.diff(s) <= 0)


def test_tmsv_retained_trace_and_mean_photon():
    r, d = 0.7, 12
    lam = math.tanh(r)
    psi = tmsv_ket(r, d, normalize=False).reshape(d, d)
    assert math.isclose(np.vdot(psi, psi).real, 1 - lam ** (2 * d), rel_tol=1e-12)
    big = tmsv_ket(r, 200, normalize=False).reshape(200, 200)
    n_mean = np.sum(np.arange(200) * np.abs(np.diag(big)) ** 2)
    assert math.isclose(n_mean, math.sinh(r) ** 2, rel_tol=1e-10)


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0, 1.5])
def test_truncation_dim_is_smallest(r):
    d = truncation_dim(StateSpec("tmsv", r=r))
    lam2 = math.tanh(r) ** 2
    assert 1 - lam2**d > 0.95
    assert d == 1 or 1 - lam2 ** (d - 1) <= 0.95


def test_truncation_ceiling():
    with pytest.raises(DimensionError):
        truncation_dim(StateSpec("tmsv", r=4.0))
    # 16 dB squeezing fits below the ceiling
    assert truncation_dim(StateSpec("tmsv", r=16 * math.log(10) / 20)) <= CUTOFF_CEILING


def test_hybrid_state_structure():
    rho = hybrid_state(0.7, 8)
    assert rho.dims.per_mode == (8, 2)
    rho.check_density()
    assert math.isclose(rho.purity(), 1.0, rel_tol=1e-12)


@pytest.mark.parametrize("kind", BELL_KINDS)
def test_bell_states(kind):
    v = bell_vector(kind)
    assert math.isclose(np.linalg.norm(v), 1.0)
    bell_state(kind).check_density()
    others = [bell_vector(k) for k in BELL_KINDS if k != kind]
    assert all(abs(np.vdot(v, w)) < 1e-15 for w in others)
