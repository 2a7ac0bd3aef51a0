"""Independent reference computations shared by the unit and acceptance tests."""

import itertools

import numpy as np
from scipy.optimize import minimize_scalar

from watercge.accounts import Sam, gaps
from watercge.core.ces import ces_rho, eval_ces


def vertex_l1_optimum(sam: Sam) -> float:
    """Exhaustive oracle: minimise sum |delta| over transfer cells among discrepant accounts.

    Candidate optima are vertices of the arrangement {A delta = -gap} with each
    non-basic cell fixed at a breakpoint (zero, or its lower bound -flow).
    """
    g = gaps(sam)
    acc = [c for c in sam.codes if abs(g[c]) > 1e-9]
    cells = [(r, c) for r in acc for c in acc if r != c]
    A = np.zeros((len(acc), len(cells)))
    for k, (r, c) in enumerate(cells):
        A[acc.index(r), k] += 1.0
        A[acc.index(c), k] -= 1.0
    b = np.array([-g[a] for a in acc])
    lower = np.array([-sam.cell(r, c) for r, c in cells])
    # one row is redundant because gaps sum to zero
    A, b = A[:-1], b[:-1]
    m, n = A.shape
    best = np.inf
    for basic in itertools.combinations(range(n), m):
        B = A[:, basic]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        rest = [k for k in range(n) if k not in basic]
        for pattern in itertools.product((0, 1), repeat=len(rest)):
            d = np.zeros(n)
            for k, use_lower in zip(rest, pattern):
                d[k] = lower[k] if use_lower else 0.0
            d[list(basic)] = np.linalg.solve(B, b - A @ d)
            if np.all(d >= lower - 1e-9):
                best = min(best, float(np.abs(d).sum()))
    return best


def brute_force_ratio(alpha, d1, rho, p1, p2) -> float:
    """x1/x2 minimising p1 x1 + p2 x2 subject to a unit CES aggregate, by 1-D search."""
    def cost(log_t):
        t = np.exp(log_t)
        x2 = 1.0 / eval_ces(alpha, [d1, 1 - d1], rho, [t, 1.0])
        return (p1 * t + p2) * x2
    res = minimize_scalar(cost, bounds=(-30, 30), method="bounded", options={"xatol": 1e-12})
    return float(np.exp(res.x))


def random_nests(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        sigma = float(np.exp(rng.uniform(np.log(0.2), np.log(5.0))))
        if abs(sigma - 1) < 0.05:
            continue
        out.append((float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.1, 0.9)), ces_rho(sigma),
                    float(rng.uniform(0.2, 5.0)), float(rng.uniform(0.2, 5.0))))
    return out
