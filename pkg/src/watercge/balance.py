"""Balance a discrepant SAM through minimal transfers between agent and capital accounts.

The adjustment is the L1-minimal change to transfer cells lying at the
intersections (A, A), (CAP, A), (CAP, CAP), (CAP, ROW) and (ROW, CAP) among the
discrepant accounts. Ties are broken towards the lexicographically smallest
vector of absolute adjustments in canonical cell order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .accounts import BALANCE_TOL, Sam, gaps, validate
from .errors import BalanceError
from .lp import linprog

TRANSFER_BLOCKS = frozenset({("A", "A"), ("CAP", "A"), ("CAP", "CAP"), ("CAP", "ROW"), ("ROW", "CAP")})
BALANCEABLE_MACROS = frozenset({"A", "CAP", "ROW"})


@dataclass(frozen=True)
class ZeroSumVerdict:
    passed: bool
    residual: float


def check_zero_sum(gap_values, tol: float = BALANCE_TOL, *, strict: bool = False) -> ZeroSumVerdict:
    """Discrepancies must cancel out for internal transfers to fix them."""
    values = list(gap_values.values()) if isinstance(gap_values, dict) else list(gap_values)
    residual = math.fsum(values)
    verdict = ZeroSumVerdict(abs(residual) <= tol, residual)
    if strict and not verdict.passed:
        raise BalanceError(f"discrepancies do not cancel out (total {residual:.6g})")
    return verdict


@dataclass(frozen=True)
class BalanceProblem:
    sam: Sam
    adjustable: tuple  # ((row_code, col_code), ...) in canonical order
    gaps: dict

    def __post_init__(self):
        for r, c in self.adjustable:
            key = (self.sam.macro(r), self.sam.macro(c))
            if key not in TRANSFER_BLOCKS:
                raise BalanceError(f"cell ({r}, {c}) lies in block {key}, not a transfer block")


def build_problem(sam: Sam, adjustable=None, tol: float = BALANCE_TOL) -> BalanceProblem:
    """Default adjustable set: transfer cells among the discrepant accounts."""
    all_gaps = gaps(sam)
    discrepant = [c for c in sam.codes if abs(all_gaps[c]) > tol]
    outside = [c for c in discrepant if sam.macro(c) not in BALANCEABLE_MACROS]
    if outside:
        raise BalanceError(
            f"discrepancies outside agent/capital/RoW accounts: {outside}; "
            "only transfer accounts can be balanced"
        )
    if adjustable is None:
        adjustable = [
            (r, c)
            for r in discrepant
            for c in discrepant
            if r != c and (sam.macro(r), sam.macro(c)) in TRANSFER_BLOCKS
        ]
    order = {c: k for k, c in enumerate(sam.codes)}
    adjustable = tuple(sorted(set(adjustable), key=lambda rc: (order[rc[0]], order[rc[1]])))
    return BalanceProblem(sam, adjustable, {c: all_gaps[c] for c in discrepant})


@dataclass
class BalanceOutcome:
    sam: Sam
    deltas: dict  # (row, col) -> change
    objective: float
    new_cells: list = field(default_factory=list)
    report: list = field(default_factory=list)


def _lp_matrices(p: BalanceProblem):
    accounts = list(p.gaps)
    pos = {a: k for k, a in enumerate(accounts)}
    ncell = len(p.adjustable)
    A = np.zeros((len(accounts), 2 * ncell))
    for k, (r, c) in enumerate(p.adjustable):
        # +delta into (r, c) raises r's row sum and c's column sum
        if r in pos:
            A[pos[r], k] += 1.0
            A[pos[r], ncell + k] -= 1.0
        if c in pos:
            A[pos[c], k] -= 1.0
            A[pos[c], ncell + k] += 1.0
    b = np.array([-p.gaps[a] for a in accounts])
    upper = np.full(2 * ncell, np.inf)
    signed = p.sam.signed_mask()
    for k, (r, c) in enumerate(p.adjustable):
        i, j = p.sam.index(r), p.sam.index(c)
        if not signed[i, j]:
            upper[ncell + k] = p.sam.flows[i, j]
    return A, b, upper


def balance_lp(p: BalanceProblem, tol: float = BALANCE_TOL, lexicographic: bool = True) -> BalanceOutcome:
    sam = p.sam
    if not p.gaps:
        return BalanceOutcome(sam, {}, 0.0, [], _report(sam, sam, {}))
    check_zero_sum(p.gaps, tol, strict=True)
    touched = {a for rc in p.adjustable for a in rc}
    lonely = [a for a in p.gaps if a not in touched]
    if lonely:
        raise BalanceError(f"infeasible: no adjustable transfer cell for account(s) {lonely}")

    A, b, upper = _lp_matrices(p)
    ncell = len(p.adjustable)
    cost = np.ones(2 * ncell)
    res = linprog(cost, A, b, upper=upper)
    if res.status != "optimal":
        raise BalanceError(f"balancing LP is {res.status}")
    x = res.x
    best = res.fun

    if lexicographic:
        slack = 0.0  # phase 1 already tolerates round-off in the bound rows
        A_ub = [cost.copy()]
        b_ub = [best + slack]
        for k in range(ncell):
            t = np.zeros(2 * ncell)
            t[k] = t[ncell + k] = 1.0
            step = linprog(t, A, b, A_ub=np.array(A_ub), b_ub=np.array(b_ub), upper=upper)
            if step.status != "optimal":
                break
            x = step.x
            A_ub.append(t)
            b_ub.append(step.fun + slack)

    delta = x[:ncell] - x[ncell:]
    flows = sam.flows.copy()
    deltas, new_cells = {}, []
    for k, (r, c) in enumerate(p.adjustable):
        if abs(delta[k]) <= 1e-12:
            continue
        i, j = sam.index(r), sam.index(c)
        if flows[i, j] == 0.0:
            new_cells.append((r, c))
        flows[i, j] = max(flows[i, j] + delta[k], 0.0) if flows[i, j] >= 0 else flows[i, j] + delta[k]
        deltas[(r, c)] = float(delta[k])
    out = sam.with_flows(flows)
    remaining = validate(out, tol)
    if remaining:
        raise BalanceError(f"balancing left discrepancies on {[d.account for d in remaining]}")
    objective = math.fsum(abs(v) for v in deltas.values())
    return BalanceOutcome(out, deltas, objective, new_cells, _report(sam, out, deltas))


def balance(sam: Sam, adjustable=None, tol: float = BALANCE_TOL) -> BalanceOutcome:
    return balance_lp(build_problem(sam, adjustable, tol), tol)


def _report(before: Sam, after: Sam, deltas: dict) -> list[dict]:
    g0, g1 = gaps(before), gaps(after)
    rows = []
    for code in before.codes:
        cells = [(rc, d) for rc, d in deltas.items() if code in rc]
        if abs(g0[code]) <= BALANCE_TOL and not cells:
            continue
        rows.append(
            {
                "account": code,
                "gap_before": g0[code],
                "gap_after": g1[code],
                "cells_adjusted": len(cells),
                "delta": math.fsum(abs(d) for _, d in cells),
            }
        )
    return rows


def write_report(outcome: BalanceOutcome, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account", "gap_before", "gap_after", "cells_adjusted", "delta"])
        for row in outcome.report:
            w.writerow(
                [row["account"], repr(row["gap_before"]), repr(row["gap_after"]),
                 row["cells_adjusted"], repr(row["delta"])]
            )
        if outcome.new_cells:
            w.writerow([])
            w.writerow(["# new_cells"] + [f"{r}->{c}" for r, c in outcome.new_cells])
