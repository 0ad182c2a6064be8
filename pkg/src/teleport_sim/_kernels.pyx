# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: displacement matrix recursion on batches of nodes."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, log, lgamma

cnp.import_array()


cdef inline void _fill_displacement(double complex xi, int d, double complex[:, ::1] out,
                                    double[::1] half_lgam) noexcept nogil:
    # Diagonal-by-diagonal Laguerre recurrence on sqrt(n!/(n+k)!) L_n^(k)(|xi|^2),
    # seeded with the Poisson amplitude |xi|^k e^{-|xi|^2/2} / sqrt(k!).
    cdef int k, n
    cdef double x = xi.real * xi.real + xi.imag * xi.imag
    cdef double r = sqrt(x)
    cdef double logr, prev, cur, nxt
    cdef double complex ph = 1.0, phk = 1.0, phk_up = 1.0
    if r > 0:
        ph = xi / r
        logr = log(r)
    for k in range(d):
        if r > 0:
            cur = exp(k * logr - 0.5 * x - half_lgam[k])
        else:
            cur = 1.0 if k == 0 else 0.0
        prev = 0.0
        for n in range(d - k):
            out[n + k, n] = phk * cur
            if k > 0:
                out[n, n + k] = phk_up * cur
            nxt = ((2 * n + 1 + k - x) * cur - sqrt(<double>n * (n + k)) * prev) / sqrt(<double>(n + 1) * (n + k + 1))
            prev = cur
            cur = nxt
        phk = phk * ph
        phk_up = phk_up * (-ph.conjugate())


cdef _half_lgamma(int d):
    cdef int k
    out = np.empty(max(d, 1), dtype=np.float64)
    for k in range(max(d, 1)):
        out[k] = 0.5 * lgamma(k + 1.0)
    return out


def displacement_stack(xi, int d):
    """Matrices <m|D(xi_p)|n> for every node, shape (N, d, d)."""
    cdef const double complex[::1] nodes = np.ascontiguousarray(xi, dtype=np.complex128).ravel()
    cdef Py_ssize_t p, npts = nodes.shape[0]
    result = np.empty((npts, d, d), dtype=np.complex128)
    cdef double complex[:, :, ::1] res = result
    cdef double[::1] hl = _half_lgamma(d)
    with nogil:
        for p in range(npts):
            _fill_displacement(nodes[p], d, res[p], hl)
    return result


def char_stack(ops, xi):
    """tr(op_k D(xi_p)) for a stack of operators, shape (K, N).

    The displacement matrix is built per node in scratch memory, so the
    (N, d, d) stack is never materialised.
    """
    cdef const double complex[:, :, ::1] o = np.ascontiguousarray(ops, dtype=np.complex128)
    cdef const double complex[::1] nodes = np.ascontiguousarray(xi, dtype=np.complex128).ravel()
    cdef Py_ssize_t K = o.shape[0], npts = nodes.shape[0]
    cdef int d = <int>o.shape[1]
    cdef Py_ssize_t k, p
    cdef int m, n
    cdef double complex acc
    result = np.empty((K, npts), dtype=np.complex128)
    cdef double complex[:, ::1] res = result
    scratch = np.empty((d, d), dtype=np.complex128)
    cdef double complex[:, ::1] dm = scratch
    cdef double[::1] hl = _half_lgamma(d)
    with nogil:
        for p in range(npts):
            _fill_displacement(nodes[p], d, dm, hl)
            for k in range(K):
                acc = 0
                for m in range(d):
                    for n in range(d):
                        acc = acc + o[k, n, m] * dm[m, n]
                res[k, p] = acc
    return result
