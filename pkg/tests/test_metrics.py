import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from watercge.errors import ContractError
from watercge.metrics import (
    MetricTable, exports, gdp, gini, gini_abs_output_change, imports, median_gini, median_marginal_response,
    metric_bundle, tabs, trade_balance,
)
from watercge.scenarios import build_sam

vectors = st.lists(st.floats(0.0, 1e6, allow_nan=False, allow_subnormal=False), min_size=1, max_size=30)


def test_gini_reference_values():
    assert gini([1, 2, 3, 4]) == 0.25
    assert gini([0, 0, 0, 5]) == 0.75
    assert gini([3, 3, 3]) == 0.0
    assert gini([0, 0]) == 0.0
    with pytest.raises(ContractError):
        gini([])


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(1e-3, 1e3))
def test_gini_scale_invariant(v, c):
    assert gini(np.multiply(v, c)) == pytest.approx(gini(v), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_gini_bounds(v):
    n = len(v)
    assert 0.0 <= gini(v) <= (n - 1) / n + 1e-12


@settings(max_examples=100, deadline=None)
@given(vectors, st.randoms(use_true_random=False))
def test_gini_permutation_invariant(v, rnd):
    w = list(v)
    rnd.shuffle(w)
    assert gini(w) == pytest.approx(gini(v), abs=1e-12)


def test_output_change_gini():
    base = {"A": 100.0, "B": 50.0}
    assert gini_abs_output_change(base, {"A": 110.0, "B": 55.0}) == pytest.approx(0.0)
    assert gini_abs_output_change(base, {"A": 100.0, "B": 60.0}) == pytest.approx(0.5)
    with pytest.raises(ContractError):
        gini_abs_output_change({"A": 0.0}, {"A": 1.0})
    assert median_gini(base, [{"A": 100.0, "B": 60.0}, {"A": 110.0, "B": 55.0}, {"A": 101.0, "B": 50.0}]) \
        == pytest.approx(0.5)


def test_median_marginal_response_example():
    assert median_marginal_response([90, 100, 110], [995, 1000, 1003]) == pytest.approx(0.4)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-1000, 1000), st.floats(-1e4, 1e4)), min_size=2, max_size=12,
                unique_by=lambda t: t[0]))
def test_median_marginal_response_ignores_order(points):
    v = [float(p[0]) for p in points]
    y = [p[1] for p in points]
    assert median_marginal_response(v[::-1], y[::-1]) == pytest.approx(median_marginal_response(v, y))


def test_median_marginal_response_contract():
    with pytest.raises(ContractError):
        median_marginal_response([1.0], [1.0])
    with pytest.raises(ContractError):
        median_marginal_response([1.0, 1.0], [1.0, 2.0])


def test_gdp_matches_sam(cfg, model_b):
    sam, _ = build_sam(cfg)
    value_added = sum(sam.row_sum(f) for f in sam.members("F"))
    taxes = sum(sam.row_sum(t) for t in sam.members("T"))
    assert gdp(model_b.state, model_b.sets) == pytest.approx(value_added + taxes, rel=1e-10)
    row = sam.members("ROW")[0]
    assert exports(model_b.state, model_b.sets) == pytest.approx(sum(sam.cell(c, row) for c in sam.members("C")))
    assert imports(model_b.state, model_b.sets, model_b.exo) == pytest.approx(
        sum(sam.cell(row, c) for c in sam.members("C")))


@pytest.mark.parametrize("mobile", [False, True])
def test_expenditure_and_income_sides_agree(model_a, model_b, mobile):
    cm = model_b if mobile else model_a
    s, st_ = cm.sets, cm.state
    g, t = gdp(st_, s), tabs(st_, s)
    assert g - t == pytest.approx(trade_balance(st_, s, cm.exo), abs=1e-8 * g)


def test_identity_holds_off_benchmark(sweeps):
    for res in sweeps.values():
        for p in res.solved:
            m = p.metrics
            assert m.GDP - m.TABS == pytest.approx(m.trade_balance, abs=1e-6 * m.GDP)


def test_bundle_and_table(model_b, tmp_path):
    b = metric_bundle(model_b.state, model_b.sets, model_b.params, model_b.exo)
    assert b.market_water_price == pytest.approx(model_b.state[("WFM", "WAT")])
    assert b.get("YHH") == b.incomes["HH"] and b.get("water") == b.total_water
    with pytest.raises(ContractError):
        b.get("nonsense")
    t = MetricTable(tuple(b.incomes))
    t.add(0.0, b, 0.0)
    t.add(-0.4, None, None, "failed")
    t.write_csv(tmp_path / "m.csv")
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert rows[0][:6] == ["dw", "status", "water_m3", "GDP", "TABS", "trade"]
    assert {"YHH", "YNPSH", "YCORP", "YGOV", "gini"} <= set(rows[0])
    assert rows[2][1] == "failed" and rows[2][2] == ""
