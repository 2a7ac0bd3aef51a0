"""Model configuration loaded from TOML."""

from __future__ import annotations

import sys
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ContractError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_CONFIG = DATA_DIR / "fixture.toml"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class Elasticities(_Section):
    top: float = Field(0.5, gt=0)
    va1: float = Field(0.6, gt=0)
    va2: float = Field(0.8, gt=0)
    output: float = Field(2.0, gt=0)
    armington: float = Field(2.0, gt=0)
    cet: float = Field(2.0, gt=0)
    top_by_industry: dict[str, float] = {}
    va1_by_industry: dict[str, float] = {}
    va2_by_industry: dict[str, float] = {}
    armington_by_commodity: dict[str, float] = {}
    cet_by_commodity: dict[str, float] = {}

    @field_validator("top", "va1", "va2", "output", "armington")
    @classmethod
    def _not_unit(cls, v):
        if v == 1.0:
            raise ValueError("CES elasticities of exactly 1 are Cobb-Douglas and not supported")
        return v

    @field_validator("top_by_industry", "va1_by_industry", "va2_by_industry", "armington_by_commodity", "cet_by_commodity")
    @classmethod
    def _positive(cls, v):
        for k, s in v.items():
            if not s > 0 or s == 1.0:
                raise ValueError(f"elasticity for {k!r} must be positive and not 1, got {s}")
        return v


class Closure(_Section):
    cpi: float = Field(1.0, gt=0)
    gov: str = "GOV"
    hh: str = "HH"
    mobile_factors: list[str] = ["LAB"]
    water: str = "WAT"
    capital: str = "KAP"


class Les(_Section):
    subsistence_share: float = Field(0.1, ge=0, lt=1)


class SetsOverrides(_Section):
    leontief: list[str] = []


class DataPaths(_Section):
    sam: str = "model_sam.csv"
    water_flows: str = "water_flows.csv"
    water_rates: str = "water_rates.csv"
    water_groups: dict[str, list[str]] = {}
    rate_sector: dict[str, str] = {}
    resource_of: dict[str, str] = {}
    eta_s: float = Field(0.5, ge=0)
    eta_s_by_industry: dict[str, float] = {}
    irrigated_share: float = Field(0.2, gt=0, lt=1)
    crop: str = "CROP"
    irrigated: str = "CROPI"
    rainfed: str = "CROPR"
    import_factor: float = Field(1.5, gt=0)


class ScenarioTable(_Section):
    targets: dict[str, list[str]] = {
        "A1": ["CROPI"], "A2": ["PAPER"], "A3": ["MINE"], "A4": ["WATER"], "A5": ["POWER"],
    }
    grid: list[float] = [-0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4]
    rainfed_shares: list[float] = [0.2, 0.4, 0.6, 0.8]
    valuation_multipliers: list[float] = [1.0, 2.0, 3.0, 4.0]


class ModelConfig(_Section):
    elasticities: Elasticities = Elasticities()
    closure: Closure = Closure()
    les: Les = Les()
    sets_overrides: SetsOverrides = Field(SetsOverrides(), alias="sets-overrides")
    data: DataPaths = DataPaths()
    scenarios: ScenarioTable = ScenarioTable()
    base_dir: Path = Path(".")

    def path(self, name: str) -> Path:
        p = Path(getattr(self.data, name))
        return p if p.is_absolute() else self.base_dir / p


def load_config(path=None) -> ModelConfig:
    path = Path(path) if path is not None else DEFAULT_CONFIG
    if not path.is_file():
        raise ContractError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as err:
        raise ContractError(f"{path}: {err}") from None
    try:
        cfg = ModelConfig.model_validate(raw)
    except ValidationError as err:
        raise ContractError(f"{path}: {err}") from None
    return cfg.model_copy(update={"base_dir": path.parent})
