# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled log-domain Sinkhorn iteration loop.

Same algorithm as the NumPy fallback, written as fused row-major passes so
each iteration avoids the temporary (n, m) allocations of the vectorized
version. Reductions run left to right within each row/column, so output is
bitwise deterministic for a fixed input.
"""

from libc.math cimport exp, log, fabs, INFINITY

import numpy as np


def sinkhorn_log_kernel(const double[:, ::1] S, const double[::1] p,
                        const double[::1] q, int max_iter, double tol):
    """Run stabilized Sinkhorn scaling on the log-kernel ``S``.

    Returns ``(a, b, iterations, violation, converged)`` where ``a`` and
    ``b`` are the log-domain scalings.
    """
    cdef Py_ssize_t n = S.shape[0]
    cdef Py_ssize_t m = S.shape[1]

    a_arr = np.zeros(n)
    b_arr = np.zeros(m)
    logp_arr = np.log(np.asarray(p))
    logq_arr = np.log(np.asarray(q))
    cmax_arr = np.empty(m)
    csum_arr = np.empty(m)

    cdef double[::1] a = a_arr
    cdef double[::1] b = b_arr
    cdef double[::1] logp = logp_arr
    cdef double[::1] logq = logq_arr
    cdef double[::1] cmax = cmax_arr
    cdef double[::1] csum = csum_arr

    cdef Py_ssize_t i, j, it
    cdef double mx, acc, v, lse, viol, row_viol, col_viol
    cdef bint converged = False
    cdef int iterations = 0

    viol = INFINITY
    for it in range(1, max_iter + 1):
        # row scaling: a_i = logp_i - lse_j(S_ij + b_j)
        for i in range(n):
            mx = -INFINITY
            for j in range(m):
                v = S[i, j] + b[j]
                if v > mx:
                    mx = v
            acc = 0.0
            for j in range(m):
                acc += exp(S[i, j] + b[j] - mx)
            a[i] = logp[i] - (mx + log(acc))

        # column scaling: b_j = logq_j - lse_i(S_ij + a_i), two row-major passes
        for j in range(m):
            cmax[j] = -INFINITY
        for i in range(n):
            for j in range(m):
                v = S[i, j] + a[i]
                if v > cmax[j]:
                    cmax[j] = v
        for j in range(m):
            csum[j] = 0.0
        for i in range(n):
            for j in range(m):
                csum[j] += exp(S[i, j] + a[i] - cmax[j])
        col_viol = 0.0
        for j in range(m):
            lse = cmax[j] + log(csum[j])
            b[j] = logq[j] - lse
            col_viol += fabs(exp(b[j] + lse) - q[j])

        # L1 marginal violation of the current iterate
        row_viol = 0.0
        for i in range(n):
            mx = -INFINITY
            for j in range(m):
                v = S[i, j] + b[j]
                if v > mx:
                    mx = v
            acc = 0.0
            for j in range(m):
                acc += exp(S[i, j] + b[j] - mx)
            row_viol += fabs(exp(a[i] + mx + log(acc)) - p[i])

        viol = row_viol + col_viol
        iterations = it
        if viol <= tol:
            converged = True
            break

    return a_arr, b_arr, iterations, viol, converged
