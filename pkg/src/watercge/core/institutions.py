"""Agent income and capital-account flows evaluated directly from a state.

This mirrors the institution block of the equation system in plain arithmetic,
which makes individual flows inspectable (and gives the equation compiler an
independent cross-check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .params import Exogenous, Parameters
from .sets import ModelSets
from .state import SolutionState


@dataclass
class AgentFlows:
    factor_income: float = 0.0
    tax_income: float = 0.0
    transfers_in: float = 0.0
    row_transfers_in: float = 0.0
    spending: float = 0.0
    transfers_out: dict = field(default_factory=dict)  # recipient -> amount (incl. "ROW")
    savings: float = 0.0
    capital_transfers_in: float = 0.0
    capital_transfers_out: dict = field(default_factory=dict)
    borrowing: float = 0.0
    lending: float = 0.0
    investment: float = 0.0

    @property
    def income(self) -> float:
        return math.fsum([self.factor_income, self.tax_income, self.transfers_in, self.row_transfers_in])

    @property
    def capital_income(self) -> float:
        return math.fsum([self.savings, self.capital_transfers_in, self.borrowing])


@dataclass
class InstitutionFlows:
    agents: dict
    residual: dict  # (equation, agent) -> state value minus recomputed value
    walras: float


def _transfer_out(s, p, payer, st, cpi):
    if payer == s.gov:
        return {r: v * cpi for r, v in p.tr_gov.items()}
    y = st[("Y", payer)]
    return {r: sh * y for (r, pay), sh in p.trshare.items() if pay == payer}


def _capital_out(s, p, payer, st, cpi):
    if payer == s.gov:
        return {r: v * cpi for r, v in p.ct_gov.items()}
    k = st[("KINC", payer)]
    return {r: sh * k for (r, pay), sh in p.ctshare.items() if pay == payer}


def institution_flows(st: SolutionState, params: Parameters, exo: Exogenous, sets: ModelSets) -> InstitutionFlows:
    s, p = sets, params
    cpi, exr = st[("CPI",)], st[("EXR",)]
    out = {a: AgentFlows() for a in s.agents}
    tr_out = {a: _transfer_out(s, p, a, st, cpi) for a in s.agents}
    ct_out = {a: _capital_out(s, p, a, st, cpi) for a in s.agents}
    for a, fl in out.items():
        fl.factor_income = math.fsum(sh * st[("YF", f)] for (r, f), sh in p.shif.items() if r == a)
        fl.tax_income = math.fsum(sh * st[("TAXR", t)] for (r, t), sh in p.shit.items() if r == a)
        fl.transfers_in = math.fsum(tr_out[b].get(a, 0.0) for b in s.agents)
        fl.row_transfers_in = exo.trrow.get(a, 0.0) * exr
        fl.transfers_out = tr_out[a]
        if s.cons_of.get(a):
            fl.spending = p.dshare[a] * st[("Y", a)]
        fl.savings = st[("Y", a)] - fl.spending - math.fsum(tr_out[a].values())
        fl.capital_transfers_in = math.fsum(ct_out[b].get(a, 0.0) for b in s.agents) + exo.ctrow.get(a, 0.0) * exr
        fl.capital_transfers_out = ct_out[a]
        fl.borrowing = p.bshare[a] * st[("TOTBORR",)]
        kinc = st[("KINC", a)]
        fl.lending = p.lshare[a] * kinc
        fl.investment = kinc - fl.lending - math.fsum(ct_out[a].values())
    residual = {}
    for a, fl in out.items():
        residual[("y_def", a)] = st[("Y", a)] - fl.income
        if s.cons_of.get(a):
            residual[("exp_def", a)] = st[("EXP", a)] - fl.spending
        residual[("sav_def", a)] = st[("SAV", a)] - fl.savings
        residual[("kinc_def", a)] = st[("KINC", a)] - (st[("SAV", a)] + fl.capital_transfers_in + st[("BORR", a)])
        residual[("lend_def", a)] = st[("LEND", a)] - fl.lending
        residual[("borr_def", a)] = st[("BORR", a)] - fl.borrowing
    walras = (
        math.fsum(st[("LEND", a)] for a in s.agents)
        - math.fsum(st[("BORR", a)] for a in s.agents)
        + (exo.rowlend - exo.lendrow) * exr
    )
    return InstitutionFlows(out, residual, walras)
