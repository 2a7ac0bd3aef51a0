"""Calibrated parameters and exogenous variables."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ContractError


@dataclass(frozen=True)
class Parameters:
    # top nest
    rho_top: dict = field(default_factory=dict)
    alpha_top: dict = field(default_factory=dict)
    delta_top: dict = field(default_factory=dict)  # weight on value added
    iva: dict = field(default_factory=dict)
    inta: dict = field(default_factory=dict)
    # value added
    rho_va1: dict = field(default_factory=dict)
    alpha_va1: dict = field(default_factory=dict)
    delta_va1: dict = field(default_factory=dict)  # (f, i) and ("CW", i)
    rho_va2: dict = field(default_factory=dict)
    alpha_va2: dict = field(default_factory=dict)
    delta_va2: dict = field(default_factory=dict)  # (f, i)
    wfdist: dict = field(default_factory=dict)  # (f, i) for mobile factors
    ica: dict = field(default_factory=dict)  # (c, i)
    theta: dict = field(default_factory=dict)  # (i, c) yield
    # commodities
    rho_ac: dict = field(default_factory=dict)
    alpha_ac: dict = field(default_factory=dict)
    delta_ac: dict = field(default_factory=dict)  # (i, c)
    rho_t: dict = field(default_factory=dict)
    alpha_t: dict = field(default_factory=dict)
    delta_t: dict = field(default_factory=dict)  # weight on exports
    rho_q: dict = field(default_factory=dict)
    alpha_q: dict = field(default_factory=dict)
    delta_q: dict = field(default_factory=dict)  # weight on imports
    mg: dict = field(default_factory=dict)  # (m, c) margin per unit
    mcoef: dict = field(default_factory=dict)  # (c, m) margin service input
    # institutions
    shif: dict = field(default_factory=dict)  # (a, f)
    shit: dict = field(default_factory=dict)  # (a, t)
    trshare: dict = field(default_factory=dict)  # (recipient, payer) non-GOV payer, incl. "ROW"
    tr_gov: dict = field(default_factory=dict)  # recipient -> baseline GOV transfer, incl. "ROW"
    dshare: dict = field(default_factory=dict)  # consumer -> spending / income
    cshare: dict = field(default_factory=dict)  # (c, a) non-LES consumers
    les_gamma: dict = field(default_factory=dict)
    les_beta: dict = field(default_factory=dict)
    ctshare: dict = field(default_factory=dict)  # (recipient, payer) capital transfers, incl. "ROW"
    ct_gov: dict = field(default_factory=dict)  # recipient -> baseline GOV capital transfer
    lshare: dict = field(default_factory=dict)
    bshare: dict = field(default_factory=dict)
    ikshare: dict = field(default_factory=dict)  # (a, k)
    invcoef: dict = field(default_factory=dict)  # (c, k)
    cpiw: dict = field(default_factory=dict)
    leontief_fallback: tuple = ()

    def with_(self, **changes) -> "Parameters":
        return replace(self, **changes)


@dataclass(frozen=True)
class Exogenous:
    qfs_mobile: dict = field(default_factory=dict)  # f -> economy-wide endowment
    qfs_fixed: dict = field(default_factory=dict)  # (f, i) -> industry endowment
    pwm: dict = field(default_factory=dict)
    pwe: dict = field(default_factory=dict)
    trrow: dict = field(default_factory=dict)  # agent -> transfers from RoW (foreign currency)
    ctrow: dict = field(default_factory=dict)  # agent -> capital transfers from RoW
    rowlend: float = 0.0  # RoW lending into the financial account (foreign currency)
    lendrow: float = 0.0  # domestic lending to RoW (foreign currency)
    tp: dict = field(default_factory=dict)
    td: dict = field(default_factory=dict)
    tm: dict = field(default_factory=dict)
    cpi_target: float = 1.0

    def __post_init__(self):
        for name in ("qfs_mobile", "qfs_fixed"):
            bad = [k for k, v in getattr(self, name).items() if v < 0]
            if bad:
                raise ContractError(f"negative factor endowments: {bad}")
        if self.cpi_target <= 0:
            raise ContractError("the CPI target must be positive")

    def with_(self, **changes) -> "Exogenous":
        return replace(self, **changes)
