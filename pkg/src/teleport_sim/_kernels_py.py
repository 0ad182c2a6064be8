"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Each recurrence step is vectorised over the quadrature nodes, so the Python
loop runs over matrix indices only.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln


def displacement_stack(xi, d: int) -> np.ndarray:
    """Matrices <m|D(xi_p)|n> for every node, shape (N, d, d)."""
    nodes = np.ascontiguousarray(xi, dtype=np.complex128).ravel()
    x = np.abs(nodes) ** 2
    r = np.sqrt(x)
    nz = r > 0
    ph = np.ones_like(nodes)
    ph[nz] = nodes[nz] / r[nz]
    logr = np.full(r.shape, -np.inf)
    logr[nz] = np.log(r[nz])
    out = np.zeros((d, d, nodes.size), dtype=np.complex128)
    half_lgam = 0.5 * gammaln(np.arange(max(d, 1)) + 1.0)
    with np.errstate(invalid="ignore"):
        for k in range(d):
            # k * log(0) is -inf (or nan for k = 0); both resolve below
            seed = np.exp(k * logr - 0.5 * x - half_lgam[k])
            seed[~nz] = 1.0 if k == 0 else 0.0
            down = ph**k
            up = (-ph.conj()) ** k
            prev = np.zeros_like(x)
            cur = seed
            for n in range(d - k):
                out[n + k, n] = down * cur
                if k:
                    out[n, n + k] = up * cur
                nxt = ((2 * n + 1 + k - x) * cur - np.sqrt(n * (n + k)) * prev) / np.sqrt((n + 1) * (n + k + 1))
                prev, cur = cur, nxt
    return np.ascontiguousarray(np.moveaxis(out, -1, 0))


def char_stack(ops, xi) -> np.ndarray:
    """tr(op_k D(xi_p)) for a stack of operators, shape (K, N)."""
    ops = np.asarray(ops, dtype=np.complex128)
    dstack = displacement_stack(xi, ops.shape[1])
    # tr(op D) = sum_{n,m} op[n, m] D[m, n]
    return np.einsum("knm,pmn->kp", ops, dstack, optimize=True)
