"""Entropic-regularized optimal transport and a small exact-assignment solver.

:func:`sinkhorn` minimizes ``<plan, C> - eps * H(plan)`` over the
transportation polytope by alternating diagonal scaling, always in the log
domain so small ``eps`` does not underflow. :func:`exact_assignment` is an
O(n^3) Hungarian solver for the uniform equal-size special case, kept
mainly as an independent oracle for tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from ._core import sinkhorn_log_kernel

__all__ = [
    "CouplingMatrix",
    "SinkhornReport",
    "sinkhorn",
    "entropy",
    "exact_assignment",
]

MARGINAL_TOL = 1e-8
MASS_TOL = 1e-10
_ASSIGNMENT_MAX_N = 64


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def check_marginal(w, name: str = "marginal") -> np.ndarray:
    """Validate a strictly positive histogram summing to one."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError(f"{name} must be a nonempty vector")
    if np.any(w <= 0):
        raise ValueError(f"{name} entries must be strictly positive")
    if abs(w.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"{name} must sum to 1, got {w.sum()!r}")
    return w


@dataclass(frozen=True)
class CouplingMatrix:
    """Transport plan with its prescribed marginals.

    Row sums must match ``row_marginal`` and column sums ``col_marginal``
    within ``MARGINAL_TOL``; total mass must be one within ``MASS_TOL``.
    ``strict=False`` skips the marginal checks so that flagged
    non-converged solver output can still be returned and inspected.
    """

    values: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    strict: bool = True

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        p = check_marginal(self.row_marginal, "row marginal")
        q = check_marginal(self.col_marginal, "col marginal")
        if vals.shape != (p.size, q.size):
            raise ValueError(f"plan shape {vals.shape} does not match marginals "
                             f"({p.size}, {q.size})")
        if np.any(vals < 0):
            raise ValueError("plan entries must be nonnegative")
        if abs(vals.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"plan mass must be 1, got {vals.sum()!r}")
        if self.strict:
            err = self.marginal_violation(vals, p, q, split=True)
            if err[0] > MARGINAL_TOL or err[1] > MARGINAL_TOL:
                raise ValueError(f"plan violates marginals: max row dev {err[0]:.3e}, "
                                 f"max col dev {err[1]:.3e}")
        object.__setattr__(self, "values", _readonly(vals))
        object.__setattr__(self, "row_marginal", _readonly(p))
        object.__setattr__(self, "col_marginal", _readonly(q))

    @staticmethod
    def marginal_violation(vals, p, q, split: bool = False):
        row_dev = np.abs(vals.sum(axis=1) - p)
        col_dev = np.abs(vals.sum(axis=0) - q)
        if split:
            return float(row_dev.max()), float(col_dev.max())
        return float(row_dev.sum() + col_dev.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class SinkhornReport:
    """Diagnostics of one Sinkhorn solve."""

    iterations: int
    violation: float
    converged: bool
    potential_source: np.ndarray
    potential_target: np.ndarray
    wall_time: float = 0.0

    def __post_init__(self):
        if self.violation < 0:
            raise ValueError("violation must be nonnegative")


def sinkhorn(C, p, q, eps: float, max_iter: int = 1000, tol: float = 1e-9,
             normalize: bool = False) -> tuple[CouplingMatrix, SinkhornReport]:
    """Solve ``min <plan, C> - eps * H(plan)`` over couplings of ``p, q``.

    Runs log-domain alternating scaling until the L1 violation of both
    marginals drops below ``tol`` or ``max_iter`` is hit; the latter is
    reported through the ``converged`` flag rather than an exception.
    ``normalize=True`` divides the cost by its maximum absolute entry first
    (the optimum is invariant to positive cost scaling only jointly with
    ``eps``; the flag trades effective regularization for comparability
    across cost scales).
    """
    start = time.perf_counter()
    C = np.ascontiguousarray(C, dtype=float)
    if C.ndim != 2:
        raise ValueError(f"cost matrix must be 2-d, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix contains non-finite entries")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = check_marginal(p, "row marginal")
    q = check_marginal(q, "col marginal")
    if C.shape != (p.size, q.size):
        raise ValueError(f"cost shape {C.shape} does not match marginals "
                         f"({p.size}, {q.size})")
    if normalize:
        scale = np.max(np.abs(C))
        if scale > 0:
            C = C / scale

    S = np.ascontiguousarray(-C / eps)
    a, b, iters, viol, converged = sinkhorn_log_kernel(S, p, q, int(max_iter), tol)
    plan = np.exp(a[:, None] + b[None, :] + S)
    # Feasibility strictness reflects the plan actually produced: a loose
    # caller tolerance can stop short of the class invariant even when the
    # iteration "converged" in the caller's sense.
    dev = CouplingMatrix.marginal_violation(plan, p, q, split=True)
    strict = bool(converged) and max(dev) <= MARGINAL_TOL
    coupling = CouplingMatrix(plan, p, q, strict=strict)
    report = SinkhornReport(
        iterations=int(iters),
        violation=float(viol),
        converged=bool(converged),
        potential_source=eps * np.asarray(a),
        potential_target=eps * np.asarray(b),
        wall_time=time.perf_counter() - start,
    )
    return coupling, report


def entropy(plan) -> float:
    """Plan entropy ``-sum(g * log(g))`` with the ``0 log 0 = 0`` convention."""
    g = np.asarray(getattr(plan, "values", plan), dtype=float)
    return float(-xlogy(g, g).sum())


def exact_assignment(C) -> tuple[np.ndarray, float]:
    """Optimal assignment for a square cost matrix with uniform weights.

    Returns ``(perm, value)`` where row ``i`` is assigned to column
    ``perm[i]`` and ``value`` is the mean of the selected entries, i.e. the
    transport cost under uniform ``1/n`` weights. Dual-potential Hungarian
    search, O(n^3); guarded to ``n <= 64`` since it exists as a test oracle.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"assignment needs a square matrix, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix contains non-finite entries")
    n = C.shape[0]
    if n > _ASSIGNMENT_MAX_N:
        raise ValueError(f"assignment solver is capped at n <= {_ASSIGNMENT_MAX_N}")

    # Shortest-augmenting-path Hungarian with potentials, 1-indexed columns;
    # match[j] is the row currently assigned to column j (0 = free).
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = C[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    perm = np.empty(n, dtype=int)
    for j in range(1, n + 1):
        perm[match[j] - 1] = j - 1
    value = float(C[np.arange(n), perm].mean())
    return perm, value
