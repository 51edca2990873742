"""Pure-NumPy log-domain Sinkhorn iteration loop.

Fallback used when the compiled extension is unavailable. Both backends
implement the same alternating potential updates on ``S = -C / eps`` with
``log(plan) = a[:, None] + b[None, :] + S`` and stop on the L1 violation of
both marginals.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


def sinkhorn_log_kernel(S, p, q, max_iter, tol):
    """Run stabilized Sinkhorn scaling on the log-kernel ``S``.

    Returns ``(a, b, iterations, violation, converged)`` where ``a`` and
    ``b`` are the log-domain scalings.
    """
    S = np.asarray(S, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    logp = np.log(p)
    logq = np.log(q)
    a = np.zeros(S.shape[0])
    b = np.zeros(S.shape[1])
    viol = np.inf
    for it in range(1, max_iter + 1):
        a = logp - logsumexp(S + b[None, :], axis=1)
        col_lse = logsumexp(S + a[:, None], axis=0)
        b = logq - col_lse
        col_viol = np.abs(np.exp(b + col_lse) - q).sum()
        row_lse = logsumexp(S + b[None, :], axis=1)
        row_viol = np.abs(np.exp(a + row_lse) - p).sum()
        viol = row_viol + col_viol
        if viol <= tol:
            return a, b, it, float(viol), True
    return a, b, max_iter, float(viol), False
