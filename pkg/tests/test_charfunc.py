import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teleport_sim.channel import ChannelSpec
from teleport_sim.charfunc import (
    ConvergenceError,
    GaussianCF,
    OutputCF,
    QuadratureGrid,
    StateCF,
    cf_overlap_matrix,
    chi_state,
    chi_tmsv,
    chi_tmsv_lossy,
    cvbsm_supermatrix,
    fidelity_cf_hybrid,
    fidelity_cf_single,
)
from teleport_sim.fock import FockDims, FockOperator, fidelity_pure, tensor
from teleport_sim.states import coherent_ket, hybrid_state, tmsv_ket

from conftest import random_density


def _thermal(nbar, d):
    p = (nbar / (1 + nbar)) ** np.arange(d) / (1 + nbar)
    return FockOperator(FockDims((d,)), np.diag(p / p.sum()).astype(complex))


def test_tmsv_cf_matches_fock_numeric():
    r, d = 0.5, 40
    rho = FockOperator.from_ket(tmsv_ket(r, d), FockDims((d, d)))
    xs = [(0.3 + 0.1j, -0.2 + 0.4j), (1.0, 0.5j), (-0.7 - 0.2j, 0.9)]
    for x1, x2 in xs:
        assert abs(chi_state(rho, x1, x2) - chi_tmsv(x1, x2, math.tanh(r))) < 1e-6


def test_tmsv_cf_trivial_points():
    assert chi_tmsv(0, 0, 0.7) == pytest.approx(1.0)
    # lossless, unit gain, lambda -> 1: the resource factor tends to one
    xi = np.array([0.5, 1.0j, -0.3 + 0.2j])
    assert np.allclose(chi_tmsv_lossy(np.conj(xi), xi, 0.999, ChannelSpec()), 1.0, atol=2e-3)


def test_vacuum_vs_thermal_is_half():
    vac = FockOperator.from_ket(np.eye(40)[0].astype(complex))
    assert fidelity_cf_single(StateCF(vac), StateCF(_thermal(1.0, 40))) == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("r,loss", [(0.0, 0.0), (0.5, 0.0), (1.0, 3.0), (0.8, 10.0)])
def test_coherent_benchmark_with_loss(r, loss):
    # unit gain: F = 1 / (1 + s / 2) with s the teleportation noise
    ch = ChannelSpec.from_db(loss)
    s = GaussianCF.tmsv(math.tanh(r)).lossy(ch).teleport_noise(1.0)
    rho = FockOperator.from_ket(coherent_ket(0.6 - 0.3j, 14))
    f = fidelity_cf_single(StateCF(rho), OutputCF(StateCF(rho), math.tanh(r), 1.0, ch))
    assert f == pytest.approx(1 / (1 + s / 2), abs=1e-6)


@settings(max_examples=25)
@given(st.integers(2, 7), st.integers(0, 2**31 - 1))
def test_parseval(d, seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(rng, d), random_density(rng, d)
    exact = np.trace(rho.entries @ sigma.entries).real
    assert fidelity_cf_single(StateCF(rho), StateCF(sigma)) == pytest.approx(exact, abs=1e-4)


def test_harmonic_route_matches_polar_grid(rng):
    ops_a = np.stack([random_density(rng, 5).entries, rng.normal(size=(5, 5)) + 0j])
    ops_b = np.stack([random_density(rng, 4).entries])
    g, noise = 0.8, 0.6
    grid = QuadratureGrid.for_cutoff(5, g)
    o = cf_overlap_matrix(ops_a, ops_b, g, noise, grid)
    xi = grid.nodes
    for k in range(2):
        ca = StateCF(FockOperator(FockDims((5,)), ops_a[k]))(xi) if k == 0 else None
        if ca is None:
            from teleport_sim import kernels

            ca = kernels.char_stack(ops_a[k][None], xi)[0]
        cb = StateCF(FockOperator(FockDims((4,)), ops_b[0]))(-g * xi)
        ref = grid.integrate(ca * cb * np.exp(-0.5 * noise * np.abs(xi) ** 2)) / math.pi
        assert abs(o[k, 0] - ref) < 1e-10


def test_supermatrix_is_a_channel():
    # outputs spread over more levels than the input occupies
    emap = cvbsm_supermatrix(math.tanh(0.6), 0.9, ChannelSpec.from_db(2.0), 6, d_out=24)
    assert emap.trace_defect() < 2e-3
    choi = emap.choi()
    assert np.allclose(choi, choi.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(choi)[0] > -1e-3


def test_supermatrix_route_matches_cf_route(rng):
    rho = random_density(rng, 5)
    lam, g, ch = math.tanh(0.7), 1.1, ChannelSpec.from_db(4.0)
    cf = fidelity_cf_single(StateCF(rho), OutputCF(StateCF(rho), lam, g, ch))
    emap = cvbsm_supermatrix(lam, g, ch, 5)
    # tr(rho E(rho)) through the Fock route
    fock = np.trace(rho.entries @ emap(rho.entries)).real
    assert abs(cf - fock) < 1e-6


def test_hybrid_ideal_limit():
    h = hybrid_state(0.6, 8)
    out = OutputCF(StateCF(h), 0.999, 1.0, ChannelSpec(), teleported=1)
    assert fidelity_cf_hybrid(StateCF(h), out) > 0.99


def test_hybrid_factorises_for_product_states(rng):
    r0, r1 = random_density(rng, 3), random_density(rng, 2)
    joint = StateCF(tensor(r0, r1))
    lam, g, ch = math.tanh(0.5), 1.0, ChannelSpec.from_db(1.0)
    f2 = fidelity_cf_hybrid(joint, OutputCF(joint, lam, g, ch, teleported=1))
    f_spec = np.trace(r0.entries @ r0.entries).real
    f_tel = fidelity_cf_single(StateCF(r1), OutputCF(StateCF(r1), lam, g, ch))
    assert f2 == pytest.approx(f_spec * f_tel, abs=1e-8)


def test_hybrid_direct_method_agrees():
    h = hybrid_state(0.5, 3)
    out = OutputCF(StateCF(h), math.tanh(0.5), 0.9, ChannelSpec.from_db(2.0), teleported=1)
    a = fidelity_cf_hybrid(StateCF(h), out)
    b = fidelity_cf_hybrid(StateCF(h), out, method="direct")
    assert abs(a - b) < 1e-4


def test_coarse_grid_raises_convergence_error():
    rho = FockOperator.from_ket(coherent_ket(1.0, 10))
    with pytest.raises(ConvergenceError):
        fidelity_cf_single(StateCF(rho), StateCF(rho), grid=QuadratureGrid(6.0, 3, 4))


def test_gain_must_be_positive():
    rho = FockOperator.from_ket(coherent_ket(0.2, 4))
    with pytest.raises(ValueError):
        OutputCF(StateCF(rho), 0.5, 0.0)
