"""Synthesise factor accounts missing from the source tables.

Every transformation here moves value between cells without changing any
account's row or column total, so a balanced SAM stays balanced and the grand
total is preserved.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Mapping

import numpy as np

from .accounts import AccountId, Sam
from .errors import AugmentError, ContractError, SamFormatError

WATER_SECTORS = ("power", "mining", "manufacturing", "agriculture")

# National water intake rates, CAD per cubic metre; agriculture is estimated
# as the mean of the other three.
DEFAULT_RATES = {
    "power": 0.00581,
    "mining": 0.05106,
    "manufacturing": 0.16737,
    "agriculture": 0.07475,
}
DEFAULT_ESTIMATED = frozenset({"agriculture"})


@dataclass(frozen=True)
class WaterRateTable:
    rates: Mapping[str, float]
    estimated: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "rates", dict(self.rates))
        object.__setattr__(self, "estimated", frozenset(self.estimated))
        for sector, rate in self.rates.items():
            if not rate > 0:
                raise ContractError(f"water rate for {sector!r} must be positive, got {rate}")
        unknown = self.estimated - set(self.rates)
        if unknown:
            raise ContractError(f"estimated flag on unknown sector(s) {sorted(unknown)}")
        if self.estimated:
            observed = [r for s, r in self.rates.items() if s not in self.estimated]
            if not observed:
                raise ContractError("every rate is marked estimated")
            mean = fmean(observed)
            for s in self.estimated:
                # published rates carry 5 decimals
                if abs(self.rates[s] - mean) > 5e-6:
                    raise ContractError(
                        f"estimated rate for {s!r} ({self.rates[s]}) is not the mean of the observed rates ({mean:.6f})"
                    )

    @classmethod
    def default(cls) -> "WaterRateTable":
        return cls(DEFAULT_RATES, DEFAULT_ESTIMATED)

    @classmethod
    def with_estimate(cls, observed: Mapping[str, float], estimated_sector: str) -> "WaterRateTable":
        rates = dict(observed)
        rates[estimated_sector] = fmean(observed.values())
        return cls(rates, frozenset({estimated_sector}))

    def rate(self, sector: str) -> float:
        try:
            return self.rates[sector]
        except KeyError:
            raise ContractError(f"no water rate for sector {sector!r}") from None

    def scaled(self, factor: float) -> "WaterRateTable":
        return WaterRateTable({s: r * factor for s, r in self.rates.items()})


def _read_table(path):
    path = Path(path)
    if not path.exists():
        raise SamFormatError("file not found", path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    if not rows:
        raise SamFormatError("empty table", path)
    header = [h.strip().lower() for h in rows[0]]
    return path, header, rows[1:]


def load_water_rates(path) -> WaterRateTable:
    path, header, rows = _read_table(path)
    try:
        isec, irate = header.index("sector"), header.index("rate")
    except ValueError:
        raise SamFormatError("rates header must contain sector, rate", path, 1) from None
    iest = header.index("estimated") if "estimated" in header else None
    rates, est = {}, set()
    for lineno, row in enumerate(rows, start=2):
        try:
            rates[row[isec].strip()] = float(row[irate])
        except (ValueError, IndexError):
            raise SamFormatError("bad rate row", path, lineno) from None
        if iest is not None and row[iest].strip().lower() in {"1", "true", "yes", "y", "*"}:
            est.add(row[isec].strip())
    return WaterRateTable(rates, frozenset(est))


def load_water_flows(path) -> dict[str, float]:
    path, header, rows = _read_table(path)
    try:
        icode, ivol = header.index("industry_code"), header.index("cubic_meters")
    except ValueError:
        raise SamFormatError("water flow header must contain industry_code, cubic_meters", path, 1) from None
    out = {}
    for lineno, row in enumerate(rows, start=2):
        try:
            vol = float(row[ivol])
        except (ValueError, IndexError):
            raise SamFormatError("non-numeric water volume", path, lineno) from None
        if vol < 0:
            raise SamFormatError("negative water volume", path, lineno)
        out[row[icode].strip()] = vol
    return out


# -- helpers -----------------------------------------------------------------

def ensure_account(sam: Sam, account: AccountId) -> Sam:
    if account.code in sam:
        if sam.macro(account.code) != account.macro:
            raise ContractError(f"account {account.code!r} exists with macro {sam.macro(account.code)!r}")
        return sam
    n = len(sam)
    flows = np.zeros((n + 1, n + 1))
    flows[:n, :n] = sam.flows
    return Sam(sam.accounts + (account,), flows, sam.year)


def _move_factor_payment(flows, sam: Sam, src: str, dst: str, amounts: Mapping[str, float]):
    """Shift ``amounts[industry]`` from factor row ``src`` to ``dst`` and carry the
    matching income from column ``src`` to column ``dst`` pro rata to ``src``'s payees."""
    i_src, i_dst = sam.index(src), sam.index(dst)
    total = 0.0
    for ind, amount in amounts.items():
        if amount == 0.0:
            continue
        j = sam.index(ind)
        available = flows[i_src, j]
        if amount > available * (1 + 1e-12):
            raise AugmentError(
                f"industry {ind!r}: {dst} payment {amount:.6g} exceeds {src} payment {available:.6g}"
            )
        flows[i_src, j] = max(available - amount, 0.0)
        flows[i_dst, j] += amount
        total += amount
    if total == 0.0:
        return
    col = flows[:, i_src].copy()
    col_total = math.fsum(col)
    if col_total <= 0:
        raise AugmentError(f"factor {src!r} distributes no income to carry over to {dst!r}")
    share = col / col_total
    flows[:, i_src] = col - total * share
    flows[:, i_dst] += total * share


# -- water ---------------------------------------------------------------------

def allocate_water(sector_volume: float, outputs: Mapping[str, float]) -> dict[str, float]:
    """Split a sector's intake across sub-industries in proportion to output."""
    if sector_volume < 0:
        raise ContractError("sector water volume must be non-negative")
    if any(v < 0 for v in outputs.values()):
        raise ContractError("sub-industry outputs must be non-negative")
    total = math.fsum(outputs.values())
    if sector_volume == 0:
        return {k: 0.0 for k in outputs}
    if total <= 0:
        raise AugmentError("all sub-industry outputs are zero in a sector holding water")
    return {k: sector_volume * v / total for k, v in outputs.items()}


def water_payments(
    volumes: Mapping[str, float], rates: WaterRateTable, sector_of: Mapping[str, str]
) -> dict[str, float]:
    """Money paid for intake: volume times the rate of the industry's sector."""
    out = {}
    for ind, vol in volumes.items():
        if ind not in sector_of:
            raise ContractError(f"water-using industry {ind!r} has no rate sector")
        out[ind] = vol * rates.rate(sector_of[ind])
    return out


def add_water_factor(
    sam: Sam, payments: Mapping[str, float], *, water: str = "WAT", capital: str = "KAP"
) -> Sam:
    """Carve water payments out of the capital row into a new water factor row."""
    sam = ensure_account(sam, AccountId(water, "Water intake", "F"))
    flows = sam.flows.copy()
    _move_factor_payment(flows, sam, capital, water, payments)
    return sam.with_flows(flows)


# -- land and other natural resources -------------------------------------------------

@dataclass(frozen=True)
class ResourceShareInputs:
    theta_va: float
    sigma_va: float = 0.6
    eta_s: float = 0.5

    def __post_init__(self):
        if not 0 < self.theta_va <= 1:
            raise ContractError(f"value-added share must lie in (0, 1], got {self.theta_va}")
        if not self.sigma_va > 0:
            raise ContractError(f"value-added elasticity must be positive, got {self.sigma_va}")
        if not self.eta_s >= 0:
            raise ContractError(f"resource supply elasticity must be non-negative, got {self.eta_s}")


def resource_share(inp: ResourceShareInputs) -> float:
    """Revenue share of an industry-specific resource factor."""
    return inp.theta_va * inp.sigma_va / (inp.theta_va * inp.eta_s + inp.sigma_va)


def add_resource_factors(
    sam: Sam,
    resource_of: Mapping[str, str],
    eta_s: Mapping[str, float] | float = 0.5,
    *,
    sigma_va: float = 0.6,
    capital: str = "KAP",
    labels: Mapping[str, str] | None = None,
) -> Sam:
    """Add land / natural-resource rows sized by the industry-specific factor share.

    ``resource_of`` maps industry -> resource factor code. Payments come out of
    the capital row, like water.
    """
    labels = {"LND": "Land", "NRS": "Other natural resources", **(labels or {})}
    factors = sorted(set(resource_of.values()))
    for f in factors:
        sam = ensure_account(sam, AccountId(f, labels.get(f, f), "F"))
    factor_rows = [sam.index(f) for f in sam.members("F")]
    payments: dict[str, dict[str, float]] = {f: {} for f in factors}
    for ind, fac in sorted(resource_of.items()):
        j = sam.index(ind)
        revenue = sam.col_sum(ind)
        va = math.fsum(sam.flows[factor_rows, j])
        if revenue <= 0 or va <= 0:
            raise AugmentError(f"industry {ind!r} has no value added to carve a resource share from")
        eta = eta_s if isinstance(eta_s, (int, float)) else eta_s.get(ind, 0.5)
        share = resource_share(ResourceShareInputs(va / revenue, sigma_va, eta))
        payments[fac][ind] = share * revenue
    flows = sam.flows.copy()
    for fac in factors:
        _move_factor_payment(flows, sam, capital, fac, payments[fac])
    return sam.with_flows(flows)


# -- import taxes and margins -------------------------------------------------------

@dataclass(frozen=True)
class ImportCostAccounts:
    domestic_tax: str = "TXD"
    import_tax: str = "TXM"
    domestic_margin: str = "MGD"
    import_margin: str = "MGM"


def import_cost_rates(sam: Sam, factor: float = 1.5, accts: ImportCostAccounts = ImportCostAccounts()):
    """Per-commodity (domestic, import) tax and margin rates such that the import rate
    is ``factor`` times the domestic rate and totals match the SAM."""
    out = {}
    ind = [sam.index(i) for i in sam.members("I")]
    row = [sam.index(r) for r in sam.members("ROW")]
    for c in sam.members("C"):
        j = sam.index(c)
        exports = math.fsum(sam.flows[j, row])
        imports = math.fsum(sam.flows[row, j])
        dom = math.fsum(sam.flows[ind, j]) - exports
        base = dom + factor * imports
        rates = {}
        for kind, (d_acc, m_acc) in {
            "tax": (accts.domestic_tax, accts.import_tax),
            "margin": (accts.domestic_margin, accts.import_margin),
        }.items():
            total = sum(sam.cell(a, c) for a in (d_acc, m_acc) if a in sam)
            if total == 0:
                rates[kind] = (0.0, 0.0)
                continue
            if base <= 0:
                raise AugmentError(f"commodity {c!r}: no domestic or import base for {kind}es")
            r = total / base
            rates[kind] = (r, factor * r)
        out[c] = {"domestic_base": dom, "imports": imports, **rates}
    return out


def split_import_costs(sam: Sam, factor: float = 1.5, accts: ImportCostAccounts = ImportCostAccounts()) -> Sam:
    """Separate import taxes and margins from the commodity totals.

    The commodity tax (margin) total is divided so that the rate on imports is
    ``factor`` times the rate on domestic supply. The tax and margin accounts'
    outlays move with their receipts, keeping every account balanced.
    """
    if factor <= 0:
        raise ContractError("import cost factor must be positive")
    macro_of = {accts.domestic_tax: "T", accts.import_tax: "T", accts.domestic_margin: "M", accts.import_margin: "M"}
    labels = {
        accts.domestic_tax: "Net commodity taxes",
        accts.import_tax: "Import taxes",
        accts.domestic_margin: "Margins on domestic supply",
        accts.import_margin: "Margins on imports",
    }
    for code, macro in macro_of.items():
        sam = ensure_account(sam, AccountId(code, labels[code], macro))
    rates = import_cost_rates(sam, factor, accts)
    flows = sam.flows.copy()
    for d_acc, m_acc, kind in (
        (accts.domestic_tax, accts.import_tax, "tax"),
        (accts.domestic_margin, accts.import_margin, "margin"),
    ):
        i_d, i_m = sam.index(d_acc), sam.index(m_acc)
        moved = 0.0
        for c, info in rates.items():
            j = sam.index(c)
            rd, rm = info[kind]
            new_d, new_m = rd * info["domestic_base"], rm * info["imports"]
            if kind == "margin" and (new_d < -1e-12 or new_m < -1e-12):
                raise AugmentError(f"commodity {c!r}: negative margin decomposition")
            moved += new_m - flows[i_m, j]
            flows[i_d, j], flows[i_m, j] = new_d, new_m
        if moved == 0.0:
            continue
        col = flows[:, i_d].copy()
        col_total = math.fsum(col)
        if col_total == 0:
            raise AugmentError(f"account {d_acc!r} has no outlays to carry over")
        share = col / col_total
        flows[:, i_d] = col - moved * share
        flows[:, i_m] += moved * share
        if kind == "margin" and (flows[:, i_d] < -1e-9).any():
            raise AugmentError(f"negative outlay on {d_acc!r} after the import split")
    return sam.with_flows(flows)


# -- irrigated / rainfed crops ---------------------------------------------------------

def split_irrigation(
    sam: Sam,
    irrigated_output_share: float,
    *,
    crop: str = "CROP",
    irrigated: str = "CROPI",
    rainfed: str = "CROPR",
    water: str = "WAT",
    capital: str = "KAP",
) -> Sam:
    """Replace the crop industry by irrigated and rainfed industries.

    Every cell in the crop row and column is split by the irrigated share except
    water, which goes wholly to the irrigated industry; capital compensates so
    both new industries stay balanced.
    """
    s = irrigated_output_share
    if not 0 < s < 1:
        raise ContractError(f"irrigated output share must lie in (0, 1), got {s}")
    if sam.macro(crop) != "I":
        raise ContractError(f"{crop!r} is not an industry account")
    label = sam.account(crop).label
    k = sam.index(crop)
    keep = [j for j in range(len(sam)) if j != k]
    n = len(keep)
    flows = np.zeros((n + 2, n + 2))
    F = sam.flows
    flows[:n, :n] = F[np.ix_(keep, keep)]
    row, col = F[k, keep], F[keep, k]
    flows[n, :n], flows[n + 1, :n] = s * row, (1 - s) * row
    flows[:n, n], flows[:n, n + 1] = s * col, (1 - s) * col
    flows[n, n], flows[n + 1, n + 1] = s * F[k, k], (1 - s) * F[k, k]
    accounts = tuple(sam.accounts[j] for j in keep) + (
        AccountId(irrigated, f"{label} (irrigated)", "I"),
        AccountId(rainfed, f"{label} (rainfed)", "I"),
    )
    if water in sam:
        w = F[sam.index(water), k]
        if w:
            iw = keep.index(sam.index(water))
            ik = keep.index(sam.index(capital))
            moved = (1 - s) * w
            if flows[ik, n] < moved:
                raise AugmentError("irrigated capital cannot absorb the crop water payment")
            flows[iw, n] += moved
            flows[iw, n + 1] -= moved
            flows[ik, n] -= moved
            flows[ik, n + 1] += moved
    return Sam(accounts, flows, sam.year)


# -- full pipeline --------------------------------------------------------------------

@dataclass
class AugmentInputs:
    """Everything needed to turn a model-level SAM into the calibration SAM."""

    sector_volumes: Mapping[str, float]
    water_groups: Mapping[str, list]  # flow-table code -> industries sharing it by output
    rate_sector: Mapping[str, str]  # industry -> rate sector
    rates: WaterRateTable = field(default_factory=WaterRateTable.default)
    resource_of: Mapping[str, str] = field(default_factory=dict)
    eta_s: Mapping[str, float] | float = 0.5
    sigma_va: float = 0.6
    irrigated_share: float | None = 0.2
    crop: str = "CROP"
    irrigated: str = "CROPI"
    rainfed: str = "CROPR"
    import_factor: float = 1.5
    water: str = "WAT"
    capital: str = "KAP"
    valuation: float = 1.0


def industry_volumes(sam: Sam, inp: AugmentInputs) -> dict[str, float]:
    volumes: dict[str, float] = {}
    for code, vol in sorted(inp.sector_volumes.items()):
        members = inp.water_groups.get(code)
        if members is None:
            members = [code]
        missing = [m for m in members if m not in sam or sam.macro(m) != "I"]
        if missing:
            raise ContractError(f"water flow {code!r} refers to unknown industries {missing}")
        outputs = {m: sam.row_sum(m) for m in members}
        for m, v in allocate_water(vol, outputs).items():
            volumes[m] = volumes.get(m, 0.0) + v
    return volumes


def augment_sam(raw: Sam, inp: AugmentInputs) -> Sam:
    """split_irrigation -> allocate_water -> water payments -> land/resources -> import split."""
    sam = raw
    if inp.irrigated_share is not None and inp.crop in sam:
        sam = split_irrigation(
            sam, inp.irrigated_share, crop=inp.crop, irrigated=inp.irrigated,
            rainfed=inp.rainfed, water=inp.water, capital=inp.capital,
        )
    volumes = industry_volumes(sam, inp)
    rates = inp.rates if inp.valuation == 1.0 else inp.rates.scaled(inp.valuation)
    pays = water_payments(volumes, rates, inp.rate_sector)
    sam = add_water_factor(sam, pays, water=inp.water, capital=inp.capital)
    if inp.resource_of:
        sam = add_resource_factors(
            sam, inp.resource_of, inp.eta_s, sigma_va=inp.sigma_va, capital=inp.capital
        )
    return split_import_costs(sam, inp.import_factor)
