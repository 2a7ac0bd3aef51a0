import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from watercge.accounts import AccountId, Sam, load_sam, validate
from watercge.augment import (
    ResourceShareInputs, WaterRateTable, add_resource_factors, add_water_factor, allocate_water,
    import_cost_rates, load_water_flows, load_water_rates, resource_share, split_import_costs,
    split_irrigation, water_payments,
)
from watercge.errors import AugmentError, ContractError
from watercge.scenarios import build_sam


# -- resource share ----------------------------------------------------------------

def test_resource_share_reference_value():
    assert resource_share(ResourceShareInputs(0.4, 0.6, 0.5)) == pytest.approx(0.3, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.05, 5.0))
def test_resource_share_limits(theta, sigma):
    assert resource_share(ResourceShareInputs(theta, sigma, 0.0)) == pytest.approx(theta, rel=1e-12)
    assert resource_share(ResourceShareInputs(theta, sigma, 1e9)) <= 1e-5


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(0.05, 5.0), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_resource_share_falls_with_supply_elasticity(theta, sigma, e1, e2):
    lo, hi = sorted((e1, e2))
    s_lo = resource_share(ResourceShareInputs(theta, sigma, lo))
    s_hi = resource_share(ResourceShareInputs(theta, sigma, hi))
    assert 0 <= s_hi <= s_lo <= theta * (1 + 1e-12)


@pytest.mark.parametrize("kw", [dict(theta_va=0.0), dict(theta_va=1.2), dict(theta_va=0.3, sigma_va=0.0),
                                dict(theta_va=0.3, eta_s=-1.0)])
def test_resource_share_rejects_bad_inputs(kw):
    with pytest.raises(ContractError):
        ResourceShareInputs(**kw)


# -- water ---------------------------------------------------------------------------

def test_allocate_water_by_output():
    out = allocate_water(900.0, {"METAL": 200.0, "FOOD": 100.0})
    assert out == pytest.approx({"METAL": 600.0, "FOOD": 300.0})
    assert allocate_water(0.0, {"A": 0.0}) == {"A": 0.0}
    with pytest.raises(AugmentError):
        allocate_water(10.0, {"A": 0.0, "B": 0.0})


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e6), st.lists(st.floats(0.1, 1e4), min_size=1, max_size=6))
def test_allocate_water_conserves_volume(vol, outputs):
    out = allocate_water(vol, {f"I{k}": q for k, q in enumerate(outputs)})
    assert math.fsum(out.values()) == pytest.approx(vol, rel=1e-12, abs=1e-9)


def test_rate_table_and_estimate(data_dir):
    rates = load_water_rates(data_dir / "water_rates.csv")
    assert rates.estimated == {"agriculture"}
    observed = [0.00581, 0.05106, 0.16737]
    assert rates.rate("agriculture") == pytest.approx(sum(observed) / 3, abs=5e-6)
    est = WaterRateTable.with_estimate({"a": 1.0, "b": 3.0}, "c")
    assert est.rate("c") == 2.0
    with pytest.raises(ContractError, match="mean"):
        WaterRateTable({"a": 1.0, "b": 3.0, "c": 9.0}, {"c"})
    assert rates.scaled(2.0).rate("power") == pytest.approx(2 * 0.00581)


def test_water_payments_are_volume_times_rate():
    rates = WaterRateTable({"power": 0.01, "mining": 0.05})
    pays = water_payments({"POWER": 1000.0, "MINE": 10.0}, rates, {"POWER": "power", "MINE": "mining"})
    assert pays == pytest.approx({"POWER": 10.0, "MINE": 0.5})
    with pytest.raises(ContractError):
        water_payments({"X": 1.0}, rates, {})


def _toy_sam():
    acc = (
        AccountId("C1", "good", "C"),
        AccountId("I1", "industry", "I"),
        AccountId("KAP", "capital", "F"),
        AccountId("LAB", "labour", "F"),
        AccountId("HH", "households", "A"),
    )
    f = np.zeros((5, 5))
    f[1, 0] = 100  # industry makes the good
    f[0, 4] = 100  # households buy it
    f[2, 1] = 60
    f[3, 1] = 40
    f[4, 2] = 60
    f[4, 3] = 40
    return Sam(acc, f)


def test_water_factor_is_carved_from_capital():
    sam = add_water_factor(_toy_sam(), {"I1": 12.0})
    assert validate(sam) == []
    assert sam.cell("WAT", "I1") == 12.0
    assert sam.cell("KAP", "I1") == 48.0
    assert sam.cell("HH", "WAT") == 12.0
    assert sam.col_sum("I1") == 100.0


def test_resource_factor_share():
    sam = add_resource_factors(_toy_sam(), {"I1": "LND"}, 0.5, sigma_va=0.6)
    assert validate(sam) == []
    # theta_VA = 1 here, so share = 0.6 / 1.1
    assert sam.cell("LND", "I1") == pytest.approx(100 * 0.6 / 1.1)


def test_split_irrigation_keeps_water_on_irrigated(data_dir, cfg):
    raw = load_sam(data_dir / "model_sam.csv")
    sam = add_water_factor(raw, {"CROP": 50.0})
    out = split_irrigation(sam, 0.2)
    assert validate(out) == []
    assert "CROP" not in out and {"CROPI", "CROPR"} <= set(out.members("I"))
    assert out.cell("WAT", "CROPI") == 50.0 and out.cell("WAT", "CROPR") == 0.0
    assert out.col_sum("CROPI") == pytest.approx(0.2 * sam.col_sum("CROP"))
    assert out.grand_total() == pytest.approx(sam.grand_total())
    with pytest.raises(ContractError):
        split_irrigation(sam, 1.0)


def test_import_costs_split_at_factor(data_dir):
    raw = load_sam(data_dir / "model_sam.csv")
    out = split_import_costs(raw, 1.5)
    assert validate(out) == []
    rates = import_cost_rates(out, 1.5)
    for c, info in rates.items():
        if info["imports"] <= 0:
            continue
        for kind, acc_d, acc_m, base_d in (("tax", "TXD", "TXM", info["domestic_base"]),
                                           ("margin", "MGD", "MGM", info["domestic_base"])):
            d, m = out.cell(acc_d, c), out.cell(acc_m, c)
            if d == 0 and m == 0:
                continue
            # import rate is 1.5 times the domestic rate, and the total is kept
            assert m / info["imports"] == pytest.approx(1.5 * d / base_d, rel=1e-9)
            assert d + m == pytest.approx(raw.cell(acc_d, c) + (raw.cell(acc_m, c) if acc_m in raw else 0.0))


def test_water_flows_table(data_dir):
    flows = load_water_flows(data_dir / "water_flows.csv")
    assert flows["POWER"] == 25000 and set(flows) >= {"CROP", "MFG"}


def test_full_augmentation(cfg):
    sam, price = build_sam(cfg)
    assert validate(sam) == []
    assert set(sam.members("F")) == {"KAP", "LAB", "LND", "NRS", "WAT"}
    rates = load_water_rates(cfg.path("water_rates"))
    for ind, p in price.items():
        assert p == pytest.approx(rates.rate(cfg.data.rate_sector[ind]))
    # water payments are volumes times prices
    volumes = {i: sam.cell("WAT", i) / p for i, p in price.items()}
    assert sum(volumes.values()) == pytest.approx(sum(load_water_flows(cfg.path("water_flows")).values()))
