"""Macro indicators derived from solved states."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from statistics import median
from typing import Sequence

import numpy as np

from .core.params import Exogenous
from .core.sets import ModelSets
from .core.state import SolutionState
from .errors import ContractError


def gdp(state: SolutionState, sets: ModelSets) -> float:
    """Value added at factor cost plus all indirect taxes."""
    va = [state[("PVA", i)] * state[("QVA", i)] for i in sets.I]
    taxes = [state[("TAXR", t)] for t in sets.taxes]
    return math.fsum(va + taxes)


def tabs(state: SolutionState, sets: ModelSets) -> float:
    """Total absorption: final consumption plus investment at purchaser prices."""
    cons = [state[("PQ", c)] * state[("QCONS", c, a)] for a in sets.consumers for c in sets.cons_of[a]]
    inv = [state[("PINV", k)] * state[("QINV", k)] for k in sets.sinks]
    return math.fsum(cons + inv)


def exports(state: SolutionState, sets: ModelSets) -> float:
    return math.fsum(state[("PE", c)] * state[("QE", c)] for c in sets.CE)


def imports(state: SolutionState, sets: ModelSets, exo: Exogenous) -> float:
    """Imports valued at the border (world price times exchange rate)."""
    exr = state[("EXR",)]
    return math.fsum(exo.pwm[c] * exr * state[("QM", c)] for c in sets.CM)


def trade_balance(state: SolutionState, sets: ModelSets, exo: Exogenous) -> float:
    """Exports minus imports in domestic currency; positive means a surplus."""
    return exports(state, sets) - imports(state, sets, exo)


def water_use(state: SolutionState, sets: ModelSets, water: str = "WAT") -> dict[str, float]:
    if water not in sets.F:
        return {}
    return {i: state[("QF", water, i)] for i in sets.users_of(water)}


def water_prices(state: SolutionState, sets: ModelSets, params, water: str = "WAT") -> dict[str, float]:
    if water not in sets.F:
        return {}
    if sets.is_mobile(water):
        w = state[("WFM", water)]
        return {i: params.wfdist.get((water, i), 1.0) * w for i in sets.users_of(water)}
    return {i: state[("WFS", water, i)] for i in sets.users_of(water)}


@dataclass(frozen=True)
class MetricBundle:
    GDP: float
    TABS: float
    trade_balance: float
    incomes: dict
    output: dict
    water_volume: dict
    water_price: dict
    market_water_price: float | None = None
    walras: float = 0.0

    @property
    def total_water(self) -> float:
        return math.fsum(self.water_volume.values())

    def get(self, name: str) -> float:
        if name in ("GDP", "TABS", "trade_balance"):
            return getattr(self, name)
        if name == "water":
            return self.total_water
        if name.startswith("Y") and name[1:] in self.incomes:
            return self.incomes[name[1:]]
        raise ContractError(f"unknown metric {name!r}")

    def scalars(self) -> dict:
        out = {"GDP": self.GDP, "TABS": self.TABS, "trade_balance": self.trade_balance}
        out.update({f"Y{a}": v for a, v in self.incomes.items()})
        out["water"] = self.total_water
        if self.market_water_price is not None:
            out["WFM_water"] = self.market_water_price
        out["WALRAS"] = self.walras
        return out


def metric_bundle(state: SolutionState, sets: ModelSets, params, exo: Exogenous, water: str = "WAT") -> MetricBundle:
    wfm = state[("WFM", water)] if water in sets.F and sets.is_mobile(water) else None
    b = MetricBundle(
        GDP=gdp(state, sets),
        TABS=tabs(state, sets),
        trade_balance=trade_balance(state, sets, exo),
        incomes={a: state[("Y", a)] for a in sets.agents},
        output={i: state[("QA", i)] for i in sets.I},
        water_volume=water_use(state, sets, water),
        water_price=water_prices(state, sets, params, water),
        market_water_price=wfm,
        walras=state[("WALRAS",)],
    )
    if not all(math.isfinite(v) for v in b.scalars().values()):
        raise ContractError("metric bundle has non-finite entries")
    return b


def median_marginal_response(volumes: Sequence[float], values: Sequence[float]) -> float:
    """Median of the slopes between consecutive grid points (value units per m3)."""
    if len(volumes) != len(values) or len(volumes) < 2:
        raise ContractError("need at least two grid points with matching volumes")
    order = np.argsort(np.asarray(volumes, dtype=float), kind="stable")
    v = np.asarray(volumes, dtype=float)[order]
    y = np.asarray(values, dtype=float)[order]
    dv = np.diff(v)
    if np.any(dv == 0):
        raise ContractError("zero water volume step between grid points")
    return float(median((np.diff(y) / dv).tolist()))


def gini(v) -> float:
    """Mean-absolute-difference Gini index; zero for an all-zero vector."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ContractError("Gini of an empty vector")
    mean = v.mean()
    if mean == 0:
        return 0.0
    return float(np.abs(v[:, None] - v[None, :]).sum() / (2 * v.size**2 * mean))


def gini_abs_output_change(baseline: dict, shocked: dict) -> float:
    bad = [i for i, q in baseline.items() if not q > 0]
    if bad:
        raise ContractError(f"baseline output must be positive for {bad}")
    return gini([abs(shocked[i] - q) / q for i, q in baseline.items()])


def median_gini(baseline: dict, shocked: Sequence[dict]) -> float:
    """Median over shock levels of the output-change Gini."""
    if not shocked:
        raise ContractError("median Gini needs at least one shocked point")
    return float(median(gini_abs_output_change(baseline, s) for s in shocked))


@dataclass
class MetricTable:
    """One row per shock level: water volume, macro indicators and output Gini."""

    agents: tuple = ("HH", "NPSH", "CORP", "GOV")
    rows: list = field(default_factory=list)

    def add(self, shock: float, bundle: MetricBundle | None, gini_index: float | None = None, status: str = "ok") -> None:
        self.rows.append((shock, bundle, gini_index, status))

    def header(self) -> list:
        return (["dw", "status", "water_m3", "GDP", "TABS", "trade"] + [f"Y{a}" for a in self.agents]
                + ["gini", "WFM_water", "WALRAS"])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for shock, b, g, status in self.rows:
                if b is None:
                    w.writerow([repr(shock), status] + [""] * (len(self.header()) - 2))
                    continue
                vals = [b.total_water, b.GDP, b.TABS, b.trade_balance] + [b.incomes.get(a, 0.0) for a in self.agents]
                wfm = "" if b.market_water_price is None else repr(b.market_water_price)
                w.writerow([repr(shock), status] + [repr(v) for v in vals]
                           + ["" if g is None else repr(g), wfm, repr(b.walras)])
