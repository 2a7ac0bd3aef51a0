"""The square equilibrium system f(x; exogenous, parameters) = 0.

Equation blocks, in order: production (top nest, value added, CapWat,
intermediates, output by commodity), commodity supply (output aggregation,
CET, purchaser prices, Armington, market clearing), margins, factor markets,
tax revenue, institutions (current and capital accounts), investment, RoW
balance, financial-flows balance with the WALRAS dummy, CPI and numeraire.

Every equation is written as a signed sum of monomials, so CES aggregators
appear in power form, e.g. ``QA^-rho = alpha^-rho (delta QVA^-rho + (1-delta) QINTA^-rho)``.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContractError, InvariantError
from .params import Exogenous, Parameters
from .sets import ModelSets
from .state import Layout, SolutionState
from .system import CompiledSystem, SystemBuilder

FD_STEP = 1e-7


def build_layout(sets: ModelSets) -> Layout:
    keys = []
    for i in sets.I:
        keys += [("QA", i), ("PA", i), ("QVA", i), ("PVA", i)]
        if sets.inputs_of.get(i):
            keys += [("QINTA", i), ("PINTA", i)]
        if sets.has_capwat(i):
            keys += [("QCW", i), ("PCW", i)]
        keys += [("QF", f, i) for f in sets.factors_of(i)]
        keys += [("QINT", c, i) for c in sets.inputs_of.get(i, ())]
        for c in sets.outputs_of[i]:
            keys += [("QXAC", i, c), ("PXAC", i, c)]
    for f in sets.F:
        if sets.is_mobile(f):
            keys.append(("WFM", f))
        else:
            keys += [("WFS", f, i) for i in sets.users_of(f)]
        keys.append(("YF", f))
    cx, ce, cm = set(sets.CX), set(sets.CE), set(sets.CM)
    for c in sets.C:
        if c in cx:
            keys += [("QX", c), ("PX", c), ("QD", c), ("PDS", c), ("PDD", c)]
            if c in ce:
                keys += [("QE", c), ("PE", c)]
        if c in cm:
            keys += [("QM", c), ("PM", c)]
        keys += [("QQ", c), ("PQ", c)]
    for m in sets.margins:
        keys += [("PMG", m), ("QMG", m)]
    keys += [("TAXR", t) for t in sets.taxes]
    for a in sets.agents:
        keys += [("Y", a), ("SAV", a), ("KINC", a), ("LEND", a), ("BORR", a)]
        if sets.cons_of.get(a):
            keys.append(("EXP", a))
            keys += [("QCONS", c, a) for c in sets.cons_of[a]]
    for k in sets.sinks:
        keys += [("PINV", k), ("QINV", k)]
    keys += [("TOTBORR",), ("EXR",), ("CPI",), ("WALRAS",)]
    return Layout(keys)


def wage(sets: ModelSets, params: Parameters, f, i):
    """(coefficient, variable key) of the price industry ``i`` pays for factor ``f``."""
    if sets.is_mobile(f):
        return params.wfdist.get((f, i), 1.0), ("WFM", f)
    return 1.0, ("WFS", f, i)


def _ces_terms(out_key, rho, alpha, members):
    """``out^-rho - alpha^-rho sum delta_k x_k^-rho``."""
    terms = [(1.0, {out_key: -rho})]
    scale = alpha ** (-rho)
    terms += [(-scale * d, {k: -rho}) for d, k in members]
    return terms


def _add_equations(b: SystemBuilder, s: ModelSets, p: Parameters, y: Exogenous) -> None:
    cx, ce, cm = set(s.CX), set(s.CE), set(s.CM)
    ileo = set(s.ILEO)

    # -- production ---------------------------------------------------------------
    for i in s.I:
        has_int = bool(s.inputs_of.get(i))
        if i in ileo:
            b.equation(("leo_va", i), [(1.0, {("QVA", i): 1}), (-p.iva[i], {("QA", i): 1})])
            if has_int:
                b.equation(("leo_int", i), [(1.0, {("QINTA", i): 1}), (-p.inta[i], {("QA", i): 1})])
        else:
            rho, alpha, d = p.rho_top[i], p.alpha_top[i], p.delta_top[i]
            b.equation(("top_ces", i), _ces_terms(
                ("QA", i), rho, alpha, [(d, ("QVA", i)), (1 - d, ("QINTA", i))]))
            b.equation(("top_foc", i), [
                (1 - d, {("PVA", i): 1, ("QVA", i): 1 + rho}),
                (-d, {("PINTA", i): 1, ("QINTA", i): 1 + rho}),
            ])
        zp = [(1 - y.tp.get(i, 0.0), {("PA", i): 1, ("QA", i): 1}), (-1.0, {("PVA", i): 1, ("QVA", i): 1})]
        if has_int:
            zp.append((-1.0, {("PINTA", i): 1, ("QINTA", i): 1}))
        b.equation(("zero_profit", i), zp)
        b.equation(("pa_def", i), [(1.0, {("PA", i): 1})] + [
            (-p.theta[(i, c)], {("PXAC", i, c): 1}) for c in s.outputs_of[i]])
        if has_int:
            b.equation(("pinta_def", i), [(1.0, {("PINTA", i): 1})] + [
                (-p.ica[(c, i)], {("PQ", c): 1}) for c in s.inputs_of[i]])

        # value-added nest: first-level factors plus the CapWat composite
        rho1, a1 = p.rho_va1[i], p.alpha_va1[i]
        members = [(p.delta_va1[(f, i)], ("QF", f, i), wage(s, p, f, i)) for f in s.fl1_of.get(i, ())]
        if s.has_capwat(i):
            members.append((p.delta_va1[("CW", i)], ("QCW", i), (1.0, ("PCW", i))))
        b.equation(("va_ces", i), _ces_terms(("QVA", i), rho1, a1, [(d, k) for d, k, _ in members]))
        for d, qk, (wc, wk) in members:
            name = ("va_foc", qk[1], i) if qk[0] == "QF" else ("va_foc", "CW", i)
            b.equation(name, [
                (a1**rho1 * wc, {wk: 1, qk: rho1 + 1}),
                (-d, {("PVA", i): 1, ("QVA", i): rho1 + 1}),
            ])
        if s.has_capwat(i):
            rho2, a2 = p.rho_va2[i], p.alpha_va2[i]
            fl2 = s.fl2_of[i]
            b.equation(("cw_ces", i), _ces_terms(
                ("QCW", i), rho2, a2, [(p.delta_va2[(f, i)], ("QF", f, i)) for f in fl2]))
            for f in fl2:
                wc, wk = wage(s, p, f, i)
                b.equation(("cw_foc", f, i), [
                    (a2**rho2 * wc, {wk: 1, ("QF", f, i): rho2 + 1}),
                    (-p.delta_va2[(f, i)], {("PCW", i): 1, ("QCW", i): rho2 + 1}),
                ])
        for c in s.inputs_of.get(i, ()):
            b.equation(("qint", c, i), [(1.0, {("QINT", c, i): 1}), (-p.ica[(c, i)], {("QINTA", i): 1})])
        for c in s.outputs_of[i]:
            b.equation(("qxac", i, c), [(1.0, {("QXAC", i, c): 1}), (-p.theta[(i, c)], {("QA", i): 1})])

    # -- commodities ----------------------------------------------------------------
    dom_margins = [m for m in s.margins if s.margin_base.get(m) == "domestic"]
    imp_margins = [m for m in s.margins if s.margin_base.get(m) == "import"]
    for c in s.C:
        if c in cx:
            rho, alpha = p.rho_ac[c], p.alpha_ac[c]
            prod = s.producers_of(c)
            b.equation(("out_ces", c), _ces_terms(
                ("QX", c), rho, alpha, [(p.delta_ac[(i, c)], ("QXAC", i, c)) for i in prod]))
            for i in prod:
                b.equation(("out_foc", i, c), [
                    (alpha**rho, {("PXAC", i, c): 1, ("QXAC", i, c): rho + 1}),
                    (-p.delta_ac[(i, c)], {("PX", c): 1, ("QX", c): rho + 1}),
                ])
            if c in ce:
                rt, at, dt = p.rho_t[c], p.alpha_t[c], p.delta_t[c]
                b.equation(("pe_def", c), [(1.0, {("PE", c): 1}), (-y.pwe[c], {("EXR",): 1})])
                b.equation(("cet", c), [
                    (1.0, {("QX", c): rt}),
                    (-(at**rt) * dt, {("QE", c): rt}),
                    (-(at**rt) * (1 - dt), {("QD", c): rt}),
                ])
                b.equation(("cet_foc", c), [
                    (dt, {("PDS", c): 1, ("QE", c): rt - 1}),
                    (-(1 - dt), {("PE", c): 1, ("QD", c): rt - 1}),
                ])
                b.equation(("px_def", c), [
                    (1.0, {("PX", c): 1, ("QX", c): 1}),
                    (-1.0, {("PDS", c): 1, ("QD", c): 1}),
                    (-1.0, {("PE", c): 1, ("QE", c): 1}),
                ])
            else:
                b.equation(("qx_qd", c), [(1.0, {("QX", c): 1}), (-1.0, {("QD", c): 1})])
                b.equation(("px_pds", c), [(1.0, {("PX", c): 1}), (-1.0, {("PDS", c): 1})])
            b.equation(("pdd_def", c), [(1.0, {("PDD", c): 1}), (-(1 + y.td.get(c, 0.0)), {("PDS", c): 1})] + [
                (-p.mg[(m, c)], {("PMG", m): 1}) for m in dom_margins if (m, c) in p.mg])
        if c in cm:
            b.equation(("pm_def", c), [
                (1.0, {("PM", c): 1}), (-(1 + y.tm.get(c, 0.0)) * y.pwm[c], {("EXR",): 1})] + [
                (-p.mg[(m, c)], {("PMG", m): 1}) for m in imp_margins if (m, c) in p.mg])
        rq, aq = p.rho_q[c], p.alpha_q[c]
        if c in cx and c in cm:
            dq = p.delta_q[c]
            b.equation(("arm", c), _ces_terms(("QQ", c), rq, aq, [(dq, ("QM", c)), (1 - dq, ("QD", c))]))
            b.equation(("arm_foc", c), [
                (1 - dq, {("PM", c): 1, ("QM", c): 1 + rq}),
                (-dq, {("PDD", c): 1, ("QD", c): 1 + rq}),
            ])
        else:
            src = ("QD", c) if c in cx else ("QM", c)
            b.equation(("arm", c), _ces_terms(("QQ", c), rq, aq, [(1.0, src)]))
        pq = [(1.0, {("PQ", c): 1, ("QQ", c): 1})]
        if c in cx:
            pq.append((-1.0, {("PDD", c): 1, ("QD", c): 1}))
        if c in cm:
            pq.append((-1.0, {("PM", c): 1, ("QM", c): 1}))
        b.equation(("pq_def", c), pq)
        mk = [(1.0, {("QQ", c): 1})]
        mk += [(-1.0, {("QINT", c, i): 1}) for i in s.I if c in s.inputs_of.get(i, ())]
        mk += [(-1.0, {("QCONS", c, a): 1}) for a in s.agents if c in s.cons_of.get(a, ())]
        mk += [(-p.invcoef[(c, k)], {("QINV", k): 1}) for k in s.sinks if (c, k) in p.invcoef]
        mk += [(-p.mcoef[(c, m)], {("QMG", m): 1}) for m in s.margins if (c, m) in p.mcoef]
        b.equation(("market", c), mk)

    # -- margins ------------------------------------------------------------------------
    for m in s.margins:
        b.equation(("pmg_def", m), [(1.0, {("PMG", m): 1})] + [
            (-p.mcoef[(c, m)], {("PQ", c): 1}) for c in s.C if (c, m) in p.mcoef])
        qk = "QD" if s.margin_base[m] == "domestic" else "QM"
        b.equation(("qmg_def", m), [(1.0, {("QMG", m): 1})] + [
            (-p.mg[(m, c)], {(qk, c): 1}) for c in s.C if (m, c) in p.mg])

    # -- factors ---------------------------------------------------------------------------
    for f in s.F:
        users = s.users_of(f)
        if s.is_mobile(f):
            b.equation(("fmarket", f), [(1.0, {("QF", f, i): 1}) for i in users] + [
                (-y.qfs_mobile[f], {})])
        else:
            for i in users:
                b.equation(("fmarket", f, i), [(1.0, {("QF", f, i): 1}), (-y.qfs_fixed[(f, i)], {})])
        yf = [(1.0, {("YF", f): 1})]
        for i in users:
            wc, wk = wage(s, p, f, i)
            yf.append((-wc, {wk: 1, ("QF", f, i): 1}))
        b.equation(("yf_def", f), yf)

    # -- taxes -------------------------------------------------------------------------------
    for t in s.taxes:
        terms = [(1.0, {("TAXR", t): 1})]
        base = s.tax_base[t]
        if base == "domestic":
            terms += [(-y.td[c], {("PDS", c): 1, ("QD", c): 1}) for c in s.CX if y.td.get(c, 0.0)]
        elif base == "import":
            terms += [(-y.tm[c] * y.pwm[c], {("EXR",): 1, ("QM", c): 1}) for c in s.CM if y.tm.get(c, 0.0)]
        else:
            terms += [(-y.tp[i], {("PA", i): 1, ("QA", i): 1}) for i in s.I if y.tp.get(i, 0.0)]
        b.equation(("taxr", t), terms)

    # -- institutions ---------------------------------------------------------------------------
    gov = s.gov
    payers = [a for a in s.agents if a != gov]
    for a in s.agents:
        inc = [(1.0, {("Y", a): 1})]
        inc += [(-p.shif[(a, f)], {("YF", f): 1}) for f in s.F if (a, f) in p.shif]
        inc += [(-p.shit[(a, t)], {("TAXR", t): 1}) for t in s.taxes if (a, t) in p.shit]
        inc += [(-p.trshare[(a, b2)], {("Y", b2): 1}) for b2 in payers if (a, b2) in p.trshare]
        inc += [(-p.tr_gov.get(a, 0.0), {("CPI",): 1}), (-y.trrow.get(a, 0.0), {("EXR",): 1})]
        b.equation(("y_def", a), inc)

        cons = s.cons_of.get(a, ())
        if cons:
            b.equation(("exp_def", a), [(1.0, {("EXP", a): 1}), (-p.dshare[a], {("Y", a): 1})])
            for c in cons:
                q = [(1.0, {("PQ", c): 1, ("QCONS", c, a): 1})]
                if a == s.hh:
                    beta = p.les_beta[c]
                    q.append((-p.les_gamma[c], {("PQ", c): 1}))
                    q.append((-beta, {("EXP", a): 1}))
                    q += [(beta * p.les_gamma[c2], {("PQ", c2): 1}) for c2 in cons]
                else:
                    q.append((-p.cshare[(c, a)], {("EXP", a): 1}))
                b.equation(("cons", c, a), q)

        sav = [(1.0, {("SAV", a): 1}), (-1.0, {("Y", a): 1})]
        if cons:
            sav.append((1.0, {("EXP", a): 1}))
        if a == gov:
            sav.append((math.fsum(p.tr_gov.values()), {("CPI",): 1}))
        else:
            out = math.fsum(v for (r, pay), v in p.trshare.items() if pay == a)
            sav.append((out, {("Y", a): 1}))
        b.equation(("sav_def", a), sav)

        kin = [(1.0, {("KINC", a): 1}), (-1.0, {("SAV", a): 1}), (-1.0, {("BORR", a): 1})]
        kin += [(-p.ctshare[(a, b2)], {("KINC", b2): 1}) for b2 in payers if (a, b2) in p.ctshare]
        kin += [(-p.ct_gov.get(a, 0.0), {("CPI",): 1}), (-y.ctrow.get(a, 0.0), {("EXR",): 1})]
        b.equation(("kinc_def", a), kin)
        b.equation(("lend_def", a), [(1.0, {("LEND", a): 1}), (-p.lshare[a], {("KINC", a): 1})])
        b.equation(("borr_def", a), [(1.0, {("BORR", a): 1}), (-p.bshare[a], {("TOTBORR",): 1})])

    # -- investment ---------------------------------------------------------------------------
    for k in s.sinks:
        b.equation(("pinv_def", k), [(1.0, {("PINV", k): 1})] + [
            (-p.invcoef[(c, k)], {("PQ", c): 1}) for c in s.C if (c, k) in p.invcoef])
        inv = [(1.0, {("PINV", k): 1, ("QINV", k): 1})]
        for a in s.agents:
            sh = p.ikshare.get((a, k), 0.0)
            if not sh:
                continue
            inv += [(-sh, {("KINC", a): 1}), (sh, {("LEND", a): 1})]
            if a == gov:
                inv.append((sh * math.fsum(p.ct_gov.values()), {("CPI",): 1}))
            else:
                out = math.fsum(v for (r, pay), v in p.ctshare.items() if pay == a)
                inv.append((sh * out, {("KINC", a): 1}))
        b.equation(("qinv_def", k), inv)

    # -- closing equations ---------------------------------------------------------------------------
    row = [(y.pwm[c], {("EXR",): 1, ("QM", c): 1}) for c in s.CM]
    row += [(-1.0, {("PE", c): 1, ("QE", c): 1}) for c in s.CE]
    row += [(p.trshare[("ROW", a)], {("Y", a): 1}) for a in payers if ("ROW", a) in p.trshare]
    row += [(p.ctshare[("ROW", a)], {("KINC", a): 1}) for a in payers if ("ROW", a) in p.ctshare]
    fixed_out = p.tr_gov.get("ROW", 0.0) + p.ct_gov.get("ROW", 0.0)
    row.append((fixed_out, {("CPI",): 1}))
    inflow = math.fsum(y.trrow.values()) + math.fsum(y.ctrow.values()) + y.rowlend - y.lendrow
    row.append((-inflow, {("EXR",): 1}))
    b.equation(("row_balance",), row)

    ff = [(1.0, {("LEND", a): 1}) for a in s.agents] + [(-1.0, {("BORR", a): 1}) for a in s.agents]
    ff += [(y.rowlend - y.lendrow, {("EXR",): 1}), (-1.0, {("WALRAS",): 1})]
    b.equation(("ff_balance",), ff)
    b.equation(("cpi_def",), [(1.0, {("CPI",): 1})] + [(-w, {("PQ", c): 1}) for c, w in p.cpiw.items()])
    b.equation(("numeraire",), [(1.0, {("CPI",): 1}), (-y.cpi_target, {})])


class Model:
    """A compiled instance of the equilibrium system."""

    def __init__(self, sets: ModelSets, params: Parameters, exo: Exogenous, reference=None, *, scale=None):
        self.sets = sets
        self.params = params
        self.exo = exo
        self.layout = build_layout(sets)
        builder = SystemBuilder(self.layout)
        try:
            _add_equations(builder, sets, params, exo)
        except KeyError as err:
            raise ContractError(f"missing parameter or exogenous value {err}") from None
        ref = None
        if reference is not None:
            ref = reference.x if isinstance(reference, SolutionState) else np.asarray(reference)
        self.system: CompiledSystem = builder.build(ref)
        if scale is not None:
            self.system.scale = np.asarray(scale, dtype=float).copy()
        if self.system.m != self.system.n:
            raise InvariantError(
                f"system is not square: {self.system.m} equations for {self.system.n} variables"
            )

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def equation_names(self) -> list:
        return self.system.names

    def with_exogenous(self, exo: Exogenous) -> "Model":
        return Model(self.sets, self.params, exo, scale=self.system.scale)

    def state(self, values) -> SolutionState:
        return SolutionState(self.layout, values)

    def residual(self, x) -> np.ndarray:
        return self.system.residual(_values(x))

    def jacobian(self, x, mode: str = "analytic") -> np.ndarray:
        x = _values(x)
        if mode == "analytic":
            J = self.system.jacobian(x)
        elif mode in ("fd", "finite-difference"):
            J = fd_jacobian(self.residual, x)
        else:
            raise ContractError(f"unknown jacobian mode {mode!r}")
        bad = np.argwhere(~np.isfinite(J))
        if bad.size:
            e, v = bad[0]
            raise InvariantError(
                f"non-finite Jacobian entry at equation {self.system.names[e]} / variable {self.layout.keys[v]}"
            )
        return J


def fd_jacobian(fun, x, step: float = FD_STEP, central: bool = True) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    f0 = None if central else fun(x)
    cols = []
    for j in range(x.size):
        h = step * max(abs(x[j]), 1.0)
        xp = x.copy()
        xp[j] += h
        if central:
            xm = x.copy()
            xm[j] -= h
            cols.append((fun(xp) - fun(xm)) / (2 * h))
        else:
            cols.append((fun(xp) - f0) / h)
    return np.column_stack(cols)


def _values(x):
    return x.x if isinstance(x, SolutionState) else np.asarray(x, dtype=float)


def residuals(state: SolutionState, exo: Exogenous, params: Parameters, sets: ModelSets) -> np.ndarray:
    """Unscaled residual vector in the documented equation order."""
    return Model(sets, params, exo).residual(state)
