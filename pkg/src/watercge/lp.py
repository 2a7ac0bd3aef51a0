"""Dense two-phase simplex for the small linear programs used in SAM balancing.

Bland's rule is used for pivoting so the iterate sequence (and therefore the
optimum returned among ties) is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-10


@dataclass
class LPResult:
    x: np.ndarray
    fun: float
    status: str  # "optimal" | "infeasible" | "unbounded"
    iterations: int


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _run(T, basis, ncols, max_iter):
    """Minimise the objective held in the last row of ``T`` over columns ``< ncols``."""
    it = 0
    m = T.shape[0] - 1
    while it < max_iter:
        obj = T[-1, :ncols]
        entering = next((j for j in range(ncols) if obj[j] < -EPS), None)
        if entering is None:
            return "optimal", it
        col = T[:m, entering]
        best, leaving = None, None
        for r in range(m):
            if col[r] > EPS:
                ratio = T[r, -1] / col[r]
                if (
                    best is None
                    or ratio < best - EPS
                    or (abs(ratio - best) <= EPS and basis[r] < basis[leaving])
                ):
                    best, leaving = ratio, r
        if leaving is None:
            return "unbounded", it
        _pivot(T, leaving, entering)
        basis[leaving] = entering
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def linprog(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, upper=None, max_iter=10_000) -> LPResult:
    """Minimise ``c @ x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``0 <= x <= upper``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    rows, rhs = [], []
    if A_eq is not None and len(A_eq):
        rows.append(np.asarray(A_eq, dtype=float))
        rhs.append(np.asarray(b_eq, dtype=float))
    n_eq = sum(r.shape[0] for r in rows)

    ub_rows, ub_rhs = [], []
    if A_ub is not None and len(A_ub):
        ub_rows.append(np.asarray(A_ub, dtype=float))
        ub_rhs.append(np.asarray(b_ub, dtype=float))
    if upper is not None:
        upper = np.asarray(upper, dtype=float)
        for j in np.flatnonzero(np.isfinite(upper)):
            e = np.zeros(n)
            e[j] = 1.0
            ub_rows.append(e[None, :])
            ub_rhs.append(np.array([upper[j]]))
    n_ub = sum(r.shape[0] for r in ub_rows)

    m = n_eq + n_ub
    A = np.zeros((m, n + n_ub))
    b = np.zeros(m)
    if n_eq:
        A[:n_eq, :n] = np.vstack(rows)
        b[:n_eq] = np.concatenate(rhs)
    if n_ub:
        A[n_eq:, :n] = np.vstack(ub_rows)
        A[n_eq:, n:] = np.eye(n_ub)
        b[n_eq:] = np.concatenate(ub_rhs)
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    nv = n + n_ub

    # phase 1: artificial basis
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = A
    T[:m, nv : nv + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, nv : nv + m] = 1.0
    for r in range(m):
        T[-1] -= T[r]
    basis = list(range(nv, nv + m))
    status, it1 = _run(T, basis, nv + m, max_iter)
    if status != "optimal" or T[-1, -1] < -1e-8 * max(1.0, np.abs(b).max(initial=0.0)):
        return LPResult(np.full(n, np.nan), np.nan, "infeasible", it1)

    # drive artificials out; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= nv:
            cand = next((j for j in range(nv) if abs(T[r, j]) > 1e-9), None)
            if cand is None:
                continue
            _pivot(T, r, cand)
            basis[r] = cand
        keep.append(r)
    T2 = np.zeros((len(keep) + 1, nv + 1))
    T2[:-1, :nv] = T[keep, :nv]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[r] for r in keep]
    cost = np.zeros(nv)
    cost[:n] = c
    T2[-1, :nv] = cost
    for r, j in enumerate(basis):
        if T2[-1, j] != 0.0:
            T2[-1] -= T2[-1, j] * T2[r]
    status, it2 = _run(T2, basis, nv, max_iter)
    if status != "optimal":
        return LPResult(np.full(n, np.nan), np.nan, status, it1 + it2)
    x = np.zeros(nv)
    for r, j in enumerate(basis):
        x[j] = T2[r, -1]
    x = x[:n]
    x[np.abs(x) < 1e-12] = 0.0
    return LPResult(x, float(c @ x), "optimal", it1 + it2)
