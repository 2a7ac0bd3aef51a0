import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from watercge.core.ces import (
    ces_calibrate, ces_input_ratio, ces_rho, cet_calibrate, cet_rho, eval_ces, eval_cet, household_demand,
)
from watercge.errors import ContractError

from oracles import brute_force_ratio, random_nests


@pytest.mark.parametrize("alpha, d1, rho, p1, p2", random_nests(20, seed=7))
def test_foc_ratio_matches_cost_minimisation(alpha, d1, rho, p1, p2):
    foc = ces_input_ratio(d1, 1 - d1, rho, p1, p2)
    assert foc == pytest.approx(brute_force_ratio(alpha, d1, rho, p1, p2), rel=1e-4)


def test_elasticity_exponent_maps():
    assert ces_rho(0.5) == pytest.approx(1.0)
    assert ces_rho(2.0) == pytest.approx(-0.5)
    assert cet_rho(2.0) == pytest.approx(1.5)
    for bad in (0.0, 1.0, -1.0):
        with pytest.raises(ContractError):
            ces_rho(bad)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.2, 5.0), min_size=2, max_size=4),
    st.lists(st.floats(0.5, 100.0), min_size=4, max_size=4),
    st.floats(0.2, 5.0).filter(lambda s: abs(s - 1) > 1e-3),
)
def test_calibration_reproduces_benchmark(prices, qty, sigma):
    q = qty[: len(prices)]
    rho = ces_rho(sigma)
    alpha, delta = ces_calibrate(prices, q, rho)
    assert delta.sum() == pytest.approx(1.0)
    out = float(np.dot(prices, q))
    assert eval_ces(alpha, delta, rho, q) == pytest.approx(out, rel=1e-10)
    # benchmark quantities satisfy every pairwise FOC
    for k in range(1, len(q)):
        r = ces_input_ratio(delta[0], delta[k], rho, prices[0], prices[k])
        assert r == pytest.approx(q[0] / q[k], rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(1.0, 100.0), st.floats(0.2, 5.0), st.floats(1.0, 100.0), st.floats(0.2, 5.0))
def test_cet_calibration_and_revenue_foc(pe, qe, pd, qd, sigma):
    rho = cet_rho(sigma)
    alpha, delta = cet_calibrate(pe, qe, pd, qd, rho)
    assert eval_cet(alpha, delta, rho, qe, qd) == pytest.approx(pe * qe + pd * qd, rel=1e-10)
    # revenue maximisation: QE/QD = [(PE / PD) (1 - delta) / delta]^sigma
    ratio = ((pe / pd) * (1 - delta) / delta) ** (1.0 / (rho - 1.0))
    assert ratio == pytest.approx(qe / qd, rel=1e-7)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.2, 5.0), min_size=3, max_size=3),
    st.lists(st.floats(0.0, 10.0), min_size=3, max_size=3),
    st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3),
    st.floats(0.0, 500.0),
)
def test_les_exhausts_the_budget(prices, gamma, beta, extra):
    beta = np.asarray(beta) / np.sum(beta)
    income = float(np.dot(prices, gamma)) + extra
    x = household_demand(income, prices, gamma, beta)
    assert float(np.dot(prices, x)) == pytest.approx(income, rel=1e-10, abs=1e-9)
    assert np.all(x >= np.asarray(gamma) - 1e-12)


def test_les_rejects_income_below_subsistence():
    with pytest.raises(ContractError, match="subsistence"):
        household_demand(1.0, [1.0, 1.0], [1.0, 1.0], [0.5, 0.5])


def test_leontief_like_nest_rejects_missing_input():
    with pytest.raises(ContractError):
        eval_ces(1.0, [0.5, 0.5], ces_rho(0.5), [0.0, 1.0])
