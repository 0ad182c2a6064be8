import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from teleport_sim import _kernels_py, kernels
from teleport_sim.fock import displacement

compiled = pytest.importorskip("teleport_sim._kernels", reason="compiled extension not built")

xi_values = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


def test_backend_selected():
    pure = os.environ.get("TELEPORT_SIM_PURE", "") not in ("", "0")
    assert kernels.BACKEND == ("python" if pure else "cython")


@given(st.lists(xi_values, min_size=1, max_size=6), st.integers(2, 14))
def test_displacement_stack_backends_agree(xis, d):
    xi = np.array(xis, dtype=np.complex128)
    assert np.allclose(compiled.displacement_stack(xi, d), _kernels_py.displacement_stack(xi, d), atol=1e-12)


def test_displacement_stack_matches_operator():
    xi = np.array([0.3 - 0.2j, 1.1j], dtype=np.complex128)
    stack = kernels.displacement_stack(xi, 8)
    for k, x in enumerate(xi):
        assert np.allclose(stack[k], displacement(x, 8).entries, atol=1e-12)


def test_char_stack_backends_agree(rng):
    d, n = 6, 5
    ops = rng.normal(size=(3, d, d)) + 1j * rng.normal(size=(3, d, d))
    xi = rng.normal(size=n) + 1j * rng.normal(size=n)
    a = compiled.char_stack(ops.astype(np.complex128), xi.astype(np.complex128))
    b = _kernels_py.char_stack(ops.astype(np.complex128), xi.astype(np.complex128))
    assert np.allclose(a, b, atol=1e-12)
