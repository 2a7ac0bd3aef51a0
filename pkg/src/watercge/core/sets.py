"""Index sets of the model and the sparsity structure derived from the benchmark SAM."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import ContractError

FACTOR_LEVEL2 = frozenset({"KAP", "WAT"})


@dataclass(frozen=True)
class ModelSets:
    I: tuple
    C: tuple
    F: tuple
    FM: tuple
    agents: tuple
    taxes: tuple
    margins: tuple
    sinks: tuple
    ILEO: tuple = ()
    CE: tuple = ()
    CM: tuple = ()
    FL2: tuple = tuple(sorted(FACTOR_LEVEL2))
    gov: str = "GOV"
    hh: str = "HH"
    # structure
    fl1_of: dict = field(default_factory=dict)  # i -> first-level factors used
    fl2_of: dict = field(default_factory=dict)  # i -> CapWat factors used
    inputs_of: dict = field(default_factory=dict)  # i -> intermediate commodities
    outputs_of: dict = field(default_factory=dict)  # i -> commodities produced
    cons_of: dict = field(default_factory=dict)  # agent -> consumed commodities
    tax_base: dict = field(default_factory=dict)  # t -> domestic | import | production
    margin_base: dict = field(default_factory=dict)  # m -> domestic | import

    def __post_init__(self):
        for name in ("I", "C", "F", "agents"):
            vals = getattr(self, name)
            if len(set(vals)) != len(vals):
                raise ContractError(f"duplicate members in set {name}")
        if not set(self.FM) <= set(self.F):
            raise ContractError("mobile factors must be factors")
        if not set(self.ILEO) <= set(self.I):
            raise ContractError("Leontief industries must be industries")
        if not set(self.CE) <= set(self.CD) or not set(self.CM) <= set(self.C):
            raise ContractError("traded commodities must be commodities (exports need domestic output)")
        if set(self.FL1) & set(self.FL2):
            raise ContractError("first- and second-level factors overlap")
        if self.hh not in self.agents:
            raise ContractError(f"household agent {self.hh!r} missing")
        if self.gov not in self.agents:
            raise ContractError(f"government agent {self.gov!r} missing")
        for t, base in self.tax_base.items():
            if base not in ("domestic", "import", "production"):
                raise ContractError(f"tax {t!r} has unknown base {base!r}")
        for m, base in self.margin_base.items():
            if base not in ("domestic", "import"):
                raise ContractError(f"margin {m!r} has unknown base {base!r}")

    # derived sets -----------------------------------------------------------
    @property
    def ICES(self) -> tuple:
        return tuple(i for i in self.I if i not in self.ILEO)

    @property
    def FNM(self) -> tuple:
        return tuple(f for f in self.F if f not in self.FM)

    @property
    def FL1(self) -> tuple:
        return tuple(f for f in self.F if f not in self.FL2)

    @property
    def CX(self) -> tuple:
        made = {c for cs in self.outputs_of.values() for c in cs}
        return tuple(c for c in self.C if c in made)

    @property
    def CD(self) -> tuple:
        return self.CX

    @property
    def consumers(self) -> tuple:
        return tuple(a for a in self.agents if self.cons_of.get(a))

    def producers_of(self, c) -> tuple:
        return tuple(i for i in self.I if c in self.outputs_of.get(i, ()))

    def factors_of(self, i) -> tuple:
        return tuple(self.fl1_of.get(i, ())) + tuple(self.fl2_of.get(i, ()))

    def users_of(self, f) -> tuple:
        return tuple(i for i in self.I if f in self.factors_of(i))

    def has_capwat(self, i) -> bool:
        return bool(self.fl2_of.get(i))

    def is_mobile(self, f) -> bool:
        return f in self.FM

    def with_mobility(self, mobile) -> "ModelSets":
        mobile = set(mobile)
        unknown = mobile - set(self.F)
        if unknown:
            raise ContractError(f"unknown mobile factors {sorted(unknown)}")
        return replace(self, FM=tuple(f for f in self.F if f in mobile))
