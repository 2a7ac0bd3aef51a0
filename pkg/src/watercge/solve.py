"""Damped Newton solver with bound clipping and structured failure reports."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .core.model import Model, fd_jacobian
from .core.state import SolutionState
from .errors import BoundThrashingError, IterationLimitError, SingularJacobianError, SolverError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10  # max abs scaled residual
    tol_step: float = 1e-12  # relative step size treated as stagnation
    max_iter: int = 200
    backtrack: float = 0.5
    min_step: float = 1e-10
    armijo: float = 1e-4
    thrash_after: int = 10  # iterations before bound thrashing is checked
    jacobian: str = "analytic"  # or "fd"
    trace: bool = False
    pivot_tol: float = 1e-13  # relative to the largest |U| entry


@dataclass
class IterationRecord:
    iteration: int
    residual_norm: float
    step: float
    active_bounds: int
    jacobian: str


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float
    x: np.ndarray
    message: str = ""
    worst: list = field(default_factory=list)  # (equation name, scaled residual)
    active_bounds: list = field(default_factory=list)  # variable names pinned at their floor
    singular: tuple | None = None  # (equation name, variable name) of a zero pivot
    fd_refreshes: int = 0
    trace: list = field(default_factory=list)

    def summary(self) -> str:
        lines = [f"{'converged' if self.converged else 'FAILED'} after {self.iterations} iterations, "
                 f"max |residual| {self.residual_norm:.3e}"]
        if self.message:
            lines.append(self.message)
        if self.singular:
            lines.append(f"zero pivot: equation {self.singular[0]} / variable {self.singular[1]}")
        for name, r in self.worst:
            lines.append(f"  residual {r:+.3e}  {name}")
        if self.active_bounds:
            lines.append(f"  active bounds: {', '.join(map(str, self.active_bounds[:20]))}")
        return "\n".join(lines)


def _factor(J: np.ndarray, pivot_tol: float):
    """LU factorise; return (lu_piv, None) or (None, (row, col)) at the first tiny pivot."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(J, check_finite=False)
    d = np.abs(np.diag(lu))
    scale = max(float(np.abs(lu).max(initial=0.0)), 1.0)
    small = np.flatnonzero(d <= pivot_tol * scale)
    if small.size == 0:
        return (lu, piv), None
    k = int(small[0])
    perm = np.arange(J.shape[0])
    for i, p in enumerate(piv):
        perm[i], perm[p] = perm[p], perm[i]
    return None, (int(perm[k]), k)


def newton_solve(
    fun: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    x0,
    x_min=None,
    cfg: SolverConfig = SolverConfig(),
    *,
    equation_names: Sequence | None = None,
    variable_names: Sequence | None = None,
) -> SolveReport:
    """Solve fun(x) = 0 from x0 by damped Newton, clipping iterates at x_min.

    Raises a SolverError subclass on failure; its ``report`` holds the last
    iterate, the worst residuals and the active bounds.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    lo = np.full(n, -np.inf) if x_min is None else np.asarray(x_min, dtype=float)
    eq_names = list(equation_names) if equation_names is not None else [f"eq{k}" for k in range(n)]
    var_names = list(variable_names) if variable_names is not None else [f"x{k}" for k in range(n)]
    x = np.maximum(x, lo)
    f = fun(x)
    if not np.all(np.isfinite(f)):
        raise SolverError("residual is not finite at the starting point", _report(False, 0, x, f, lo, eq_names, var_names))
    trace: list[IterationRecord] = []
    refreshes = 0
    mode = cfg.jacobian
    history: list[frozenset] = []

    def fail(exc, msg, it, singular=None):
        rep = _report(False, it, x, f, lo, eq_names, var_names, msg, trace, refreshes, singular)
        log.debug(rep.summary())
        raise exc(msg, rep)

    for it in range(cfg.max_iter + 1):
        norm = float(np.max(np.abs(f), initial=0.0))
        if norm <= cfg.tol:
            return _report(True, it, x, f, lo, eq_names, var_names, "", trace, refreshes)
        if it == cfg.max_iter:
            fail(IterationLimitError, f"no convergence within {cfg.max_iter} iterations", it)
        J = fd_jacobian(fun, x) if mode == "fd" else jac(x)
        if not np.all(np.isfinite(J)):
            fail(SolverError, "Jacobian has non-finite entries", it)
        fac, bad = _factor(J, cfg.pivot_tol)
        if bad is not None:
            if mode != "fd" and refreshes == 0:
                refreshes += 1
                mode = "fd"
                J = fd_jacobian(fun, x)
                fac, bad = _factor(J, cfg.pivot_tol)
            if bad is not None:
                fail(SingularJacobianError, "Jacobian is singular", it, (eq_names[bad[0]], var_names[bad[1]]))
        dx = -lu_solve(fac, f, check_finite=False)
        f2 = float(f @ f)
        t = 1.0
        while True:
            xt = np.maximum(x + t * dx, lo)
            ft = fun(xt)
            if np.all(np.isfinite(ft)) and float(ft @ ft) <= (1 - 2 * cfg.armijo * t) * f2:
                break
            t *= cfg.backtrack
            if t < cfg.min_step:
                break
        if t < cfg.min_step:
            if refreshes == 0 and mode != "fd":
                # stagnation: retry once with a finite-difference Jacobian
                refreshes += 1
                mode = "fd"
                trace.append(IterationRecord(it, norm, 0.0, 0, "refresh"))
                continue
            fail(SolverError, "line search failed to reduce the residual", it)
        step = np.abs(xt - x)
        x, f = xt, ft
        active = frozenset(np.flatnonzero((x <= lo) & np.isfinite(lo)).tolist())
        history.append(active)
        trace.append(IterationRecord(it + 1, float(np.max(np.abs(f), initial=0.0)), t, len(active), mode))
        if cfg.trace:
            log.info("iter %3d  |f| %.3e  step %.3g  active %d", it + 1, trace[-1].residual_norm, t, len(active))
        if len(history) > cfg.thrash_after:
            recent = history[-cfg.thrash_after:]
            changes = sum(a != b for a, b in zip(recent, recent[1:]))
            if changes >= cfg.thrash_after - 2 and any(recent):
                fail(BoundThrashingError, "iterates keep entering and leaving variable bounds", it + 1)
        if float(np.max(step, initial=0.0)) <= cfg.tol_step * (1.0 + float(np.max(np.abs(x), initial=0.0))):
            norm = float(np.max(np.abs(f), initial=0.0))
            if norm <= cfg.tol:
                continue
            if refreshes == 0 and mode != "fd":
                refreshes += 1
                mode = "fd"
                continue
            fail(SolverError, "step size below tolerance before the residual converged", it + 1)
    raise AssertionError("unreachable")  # pragma: no cover


def _report(ok, it, x, f, lo, eq_names, var_names, msg="", trace=(), refreshes=0, singular=None) -> SolveReport:
    order = np.argsort(-np.abs(f))[:5]
    worst = [(eq_names[k], float(f[k])) for k in order if np.isfinite(f[k])]
    active = [var_names[k] for k in np.flatnonzero((x <= lo) & np.isfinite(lo))]
    norm = float(np.max(np.abs(f), initial=0.0)) if np.all(np.isfinite(f)) else float("inf")
    return SolveReport(ok, it, norm, x.copy(), msg, worst, active, singular, refreshes, list(trace))


def solve(model: Model, x0, cfg: SolverConfig = SolverConfig()) -> tuple[SolutionState, SolveReport]:
    """Solve a compiled model from a starting state (or vector)."""
    x0 = x0.x if isinstance(x0, SolutionState) else np.asarray(x0, dtype=float)
    rep = newton_solve(
        model.residual,
        lambda x: model.jacobian(x, cfg.jacobian),
        x0,
        model.layout.x_min(),
        cfg,
        equation_names=[_name(e) for e in model.equation_names],
        variable_names=[_name(k) for k in model.layout.keys],
    )
    return model.state(rep.x), rep


def _name(key) -> str:
    return key[0] + ("[" + ",".join(map(str, key[1:])) + "]" if len(key) > 1 else "")
