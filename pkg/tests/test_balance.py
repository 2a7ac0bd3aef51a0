import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog as scipy_linprog

from watercge.accounts import AccountId, Sam, gaps, load_sam, validate
from watercge.balance import balance, build_problem, check_zero_sum
from watercge.errors import BalanceError
from watercge.lp import linprog

from oracles import vertex_l1_optimum


@st.composite
def small_unbalanced(draw):
    n = draw(st.integers(2, 4))
    flows = np.array(draw(st.lists(st.integers(0, 6), min_size=n * n, max_size=n * n)), dtype=float).reshape(n, n)
    np.fill_diagonal(flows, 0.0)
    flows = flows + flows.T  # balanced circulation
    shift = draw(st.lists(st.integers(-5, 5), min_size=n * n, max_size=n * n))
    flows = np.maximum(flows + np.array(shift, dtype=float).reshape(n, n) * ~np.eye(n, dtype=bool), 0.0)
    acc = tuple(AccountId(f"H{k}", f"agent {k}", "A") for k in range(n))
    return Sam(acc, flows)


def test_unbalanced_fixture_balances(data_dir):
    sam = load_sam(data_dir / "mini_sam_unbalanced.csv")
    out = balance(sam)
    assert validate(out.sam) == []
    assert max(abs(v) for v in gaps(out.sam).values()) <= 1e-5
    assert out.objective == pytest.approx(4.0)
    # untouched cells are unchanged
    changed = np.argwhere(out.sam.flows != sam.flows)
    assert len(changed) == len(out.deltas)


def test_balanced_input_is_left_alone(data_dir):
    sam = load_sam(data_dir / "mini_sam.csv")
    out = balance(sam)
    assert out.objective == 0.0 and out.deltas == {}
    assert np.array_equal(out.sam.flows, sam.flows)


def test_three_account_example():
    acc = tuple(AccountId(c, c, "A") for c in "XYZ")
    # X receives 10 but pays 7; Y pays 3 more than it gets; Z balanced before
    sam = Sam(acc, [[0, 5, 5], [4, 0, 0], [3, 0, 0]])
    assert check_zero_sum(gaps(sam)).passed
    out = balance(sam)
    assert validate(out.sam) == []
    assert out.objective == pytest.approx(vertex_l1_optimum(sam))


def test_zero_sum_check():
    assert check_zero_sum({"X": 2.0, "Y": -2.0}).passed
    verdict = check_zero_sum({"X": 2.0, "Y": -1.0})
    assert not verdict.passed and verdict.residual == 1.0
    with pytest.raises(BalanceError, match="cancel"):
        check_zero_sum([1.0, 1.0], strict=True)


def test_discrepancy_outside_transfer_accounts_rejected():
    acc = (AccountId("C1", "c", "C"), AccountId("H", "h", "A"))
    sam = Sam(acc, [[0, 5], [4, 0]])
    with pytest.raises(BalanceError, match="transfer"):
        build_problem(sam)


@settings(max_examples=40, deadline=None)
@given(small_unbalanced())
def test_lp_matches_vertex_enumeration(sam):
    if not check_zero_sum(gaps(sam)).passed:
        return
    oracle = vertex_l1_optimum(sam)
    if not validate(sam):
        assert oracle in (0.0, np.inf)
        return
    out = balance(sam)
    assert validate(out.sam) == []
    assert out.objective == pytest.approx(oracle, abs=1e-9)


# -- simplex -------------------------------------------------------------------------

def test_simplex_textbook_example():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
    r = linprog([-3, -5], A_ub=[[1, 0], [0, 2], [3, 2]], b_ub=[4, 12, 18])
    assert r.status == "optimal"
    assert np.allclose(r.x, [2, 6])
    assert r.fun == pytest.approx(-36)


def test_simplex_infeasible_and_unbounded():
    assert linprog([1, 1], A_eq=[[1, 1]], b_eq=[-1]).status == "infeasible"
    assert linprog([-1, 0], A_ub=[[0, 1]], b_ub=[1]).status == "unbounded"


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 4).flatmap(
        lambda m: st.tuples(
            st.just(m),
            st.integers(m, 6),
            st.randoms(use_true_random=False),
        )
    )
)
def test_simplex_matches_scipy(case):
    m, n, rnd = case
    rng = np.random.default_rng(rnd.randint(0, 2**31))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.integers(0, 4, size=n).astype(float)
    b = A @ x0  # feasible by construction
    c = rng.integers(0, 5, size=n).astype(float)
    upper = np.where(rng.random(n) < 0.3, x0 + rng.integers(0, 3, size=n), np.inf)
    ours = linprog(c, A, b, upper=upper)
    ref = scipy_linprog(c, A_eq=A, b_eq=b, bounds=[(0, None if np.isinf(u) else u) for u in upper], method="highs")
    assert ours.status == "optimal" and ref.status == 0
    assert ours.fun == pytest.approx(ref.fun, abs=1e-8)
    assert np.allclose(A @ ours.x, b, atol=1e-8)
    assert np.all(ours.x >= -1e-9) and np.all(ours.x <= upper + 1e-9)


def test_simplex_is_deterministic():
    A = np.array([[1.0, 1, 1, 1]])
    r1 = linprog([1, 1, 1, 1], A, [2.0])
    r2 = linprog([1, 1, 1, 1], A, [2.0])
    assert np.array_equal(r1.x, r2.x)
