import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from teleport_sim.fock import (
    DimensionError,
    FockDims,
    FockOperator,
    PreconditionError,
    annihilation,
    apply_local,
    creation,
    displacement_matrix,
    embed,
    fidelity_pure,
    identity,
    number,
    partial_trace,
    renormalize,
    tensor,
    TruncationError,
)

from conftest import random_density


def test_ladder_algebra_on_truncated_space():
    d = 6
    a, ad, n = annihilation(d).entries, creation(d).entries, number(d).entries
    assert np.allclose(ad @ a, n)
    comm = a @ ad - ad @ a
    # [a, a^dagger] = 1 except at the truncation edge
    assert np.allclose(np.diag(comm)[:-1], 1)
    assert np.isclose(comm[-1, -1], 1 - d)


def test_dims_validation():
    with pytest.raises(DimensionError):
        FockDims((0, 2))
    with pytest.raises(DimensionError):
        FockOperator(FockDims((2,)), np.eye(3))


def test_entries_are_read_only():
    op = identity((2, 3))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5


def test_check_density_rejects_non_psd():
    bad = FockOperator(FockDims((2,)), np.diag([1.5, -0.5]).astype(complex))
    with pytest.raises(PreconditionError):
        bad.check_density()
    assert not bad.is_density()


@pytest.mark.parametrize("xi", [0.3, 1.2 - 0.7j, -2.0 + 1.5j, 4.0j])
def test_displacement_laguerre_matches_expm(xi):
    d = int(2 * abs(xi) ** 2 + 10)
    big = 3 * d  # the reference needs generous headroom
    a = annihilation(big).entries
    exact = scipy.linalg.expm(xi * a.conj().T - np.conj(xi) * a)[:d, :d]
    assert np.max(np.abs(displacement_matrix(xi, d) - exact)) < 1e-8


def test_displacement_laguerre_is_stable_at_large_cutoff():
    m = displacement_matrix(3.0 + 1.0j, 40)
    assert np.all(np.isfinite(m))
    assert np.max(np.abs(m)) <= 1 + 1e-12


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_displacement_inverse_with_headroom(x, y):
    xi = complex(x, y)
    d = 10
    head = int(2 * abs(xi) ** 2) + 30
    dp = displacement_matrix(xi, d + head)
    dm = displacement_matrix(-xi, d + head)
    assert np.allclose((dp @ dm)[:d, :d], np.eye(d), atol=1e-8)


def test_partial_trace_of_product(rng):
    r1, r2 = random_density(rng, 3), random_density(rng, 4)
    joint = tensor(r1, r2)
    assert np.allclose(partial_trace(joint, [0]).entries, r1.entries)
    assert np.allclose(partial_trace(joint, [1]).entries, r2.entries)


def test_apply_local_matches_kronecker(rng):
    r = tensor(random_density(rng, 3), random_density(rng, 2))
    op = rng.normal(size=(2, 2))
    full = embed(op, 1, r.dims).entries
    out = apply_local(r, op, 1)
    assert np.allclose(out.entries, full @ r.entries @ full.conj().T)


def test_renormalize_threshold():
    leaky = FockOperator(FockDims((2,)), np.diag([0.5, 0.4]).astype(complex))
    with pytest.raises(TruncationError):
        renormalize(leaky)
    ok = renormalize(FockOperator(FockDims((2,)), np.diag([0.6, 0.36]).astype(complex)))
    assert math.isclose(ok.trace().real, 1.0)


def test_fidelity_pure_is_overlap():
    v = np.array([1, 1j, 0]) / math.sqrt(2)
    w = np.array([1, 0, 0], dtype=complex)
    assert math.isclose(
        fidelity_pure(FockOperator.from_ket(v), FockOperator.from_ket(w)), 0.5, rel_tol=1e-12
    )


def test_padded_embeds_in_larger_space(rng):
    r = random_density(rng, 3)
    p = r.padded((5,))
    assert p.dims.per_mode == (5,)
    assert np.allclose(p.entries[:3, :3], r.entries)
    assert np.allclose(p.entries[3:], 0)
