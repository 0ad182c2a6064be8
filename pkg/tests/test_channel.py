import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from teleport_sim.channel import (
    ChannelSpec,
    apply_kraus_dense,
    apply_loss,
    binomial_loss_matrix,
    db_to_transmissivity,
    kraus_set,
    squeeze_db_to_r,
    r_to_squeeze_db,
    transmissivity_to_db,
)
from teleport_sim.fock import FockDims, FockOperator, PreconditionError, tensor
from teleport_sim.states import coherent_ket

from conftest import random_density


@given(st.floats(0.01, 1.0), st.integers(1, 12))
def test_kraus_completeness(t, d):
    total = sum(k.entries.conj().T @ k.entries for k in kraus_set(t, d))
    assert np.allclose(total, np.eye(d), atol=1e-10)


def test_kraus_closed_form_entry():
    t, d = 0.3, 6
    g2 = kraus_set(t, d)[2].entries
    # <1|G_2|3> = sqrt(C(3, 2)) t^(1/2) (1 - t)
    assert math.isclose(g2[1, 3].real, math.sqrt(3) * math.sqrt(t) * (1 - t), rel_tol=1e-12)


def test_fast_loss_matches_dense(rng):
    rho = tensor(random_density(rng, 5), random_density(rng, 3))
    for mode in (0, 1):
        a = apply_loss(rho, mode, 0.37).entries
        b = apply_kraus_dense(rho, mode, 0.37).entries
        assert np.allclose(a, b, atol=1e-12)


@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_loss_composition(t1, t2):
    rho = random_density(np.random.default_rng(7), 6)
    two = apply_loss(apply_loss(rho, 0, t1), 0, t2)
    one = apply_loss(rho, 0, t1 * t2)
    assert np.allclose(two.entries, one.entries, atol=1e-10)


def test_coherent_state_stays_coherent():
    d, a, t = 30, 1.3, 0.4
    out = apply_loss(FockOperator.from_ket(coherent_ket(a, d)), 0, t)
    target = coherent_ket(math.sqrt(t) * a, d)
    assert np.allclose(out.entries, np.outer(target, target.conj()), atol=1e-8)


def test_loss_preserves_density_invariants(rng):
    out = apply_loss(random_density(rng, 7), 0, 0.2)
    out.check_density()


def test_binomial_matrix_columns_sum_to_one():
    m = binomial_loss_matrix(0.6, 8)
    assert np.allclose(m.sum(axis=0), 1)


def test_db_conversions():
    assert math.isclose(db_to_transmissivity(10.0), 0.1)
    assert math.isclose(transmissivity_to_db(0.5), 3.0103, rel_tol=1e-4)
    assert math.isclose(r_to_squeeze_db(squeeze_db_to_r(7.5)), 7.5)
    assert math.isclose(squeeze_db_to_r(10 * math.log10(math.e ** 2)), 1.0)
    with pytest.raises(PreconditionError):
        db_to_transmissivity(-1)


def test_channel_spec_split():
    c = ChannelSpec.from_db(6.0)
    assert math.isclose(c.t1, c.t2)
    assert math.isclose(c.total_loss_db, 6.0)
    c2 = ChannelSpec.from_db(6.0, t1_db=1.0)
    assert math.isclose(transmissivity_to_db(c2.t2), 5.0)
    with pytest.raises(PreconditionError):
        ChannelSpec(0.0, 1.0)
