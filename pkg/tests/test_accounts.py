import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from watercge.accounts import (
    AccountId, AggregationMap, Sam, aggregate, gaps, load_aggregation_map, load_sam, save_sam, validate,
)
from watercge.errors import ContractError, SamFormatError


def test_balanced_fixture_validates_clean(data_dir):
    sam = load_sam(data_dir / "mini_sam.csv")
    assert len(sam) == 20
    assert validate(sam) == []


def test_unbalanced_fixture_gaps(data_dir):
    sam = load_sam(data_dir / "mini_sam_unbalanced.csv")
    bad = {d.account: d.gap for d in validate(sam)}
    assert bad == pytest.approx({"GOV": -2.0, "HH": -2.0, "K_HH": 4.0})
    assert sum(gaps(sam).values()) == pytest.approx(0.0, abs=1e-12)


def test_model_sam_is_balanced(data_dir):
    sam = load_sam(data_dir / "model_sam.csv")
    assert validate(sam) == []
    assert set(sam.members("F")) == {"LAB", "KAP"}


def test_save_load_round_trip(tmp_path, data_dir):
    sam = load_sam(data_dir / "model_sam.csv")
    save_sam(sam, tmp_path / "s.csv")
    again = load_sam(tmp_path / "s.csv")
    assert again.codes == sam.codes
    assert np.array_equal(again.flows, sam.flows)


def test_canonical_order_is_independent_of_input_order():
    acc = (AccountId("B", "b", "A"), AccountId("A", "a", "A"), AccountId("X", "x", "C"))
    f = np.array([[0, 1, 2], [3, 0, 4], [5, 6, 0]], dtype=float)
    s1 = Sam(acc, f)
    perm = [2, 0, 1]
    s2 = Sam(tuple(acc[k] for k in perm), f[np.ix_(perm, perm)])
    assert s1.codes == s2.codes == ["X", "A", "B"]
    assert np.array_equal(s1.flows, s2.flows)
    assert s1.cell("B", "A") == 1.0 and s1.cell("A", "B") == 3.0


def test_negative_cell_only_in_tax_accounts():
    acc = (AccountId("T1", "tax", "T"), AccountId("C1", "c", "C"))
    Sam(acc, [[0, -1], [0, 0]])
    with pytest.raises(ContractError):
        Sam((AccountId("A1", "a", "A"), AccountId("C1", "c", "C")), [[0, -1], [0, 0]])


@pytest.mark.parametrize(
    "body, needle",
    [
        (",A,B\nA,0,x\nB,1,0\n", "non-numeric"),
        (",A,B\nA,0,1\n", "non-square"),
        (",A,B\nA,0,1\nA,1,0\n", "duplicate"),
    ],
)
def test_format_errors_carry_location(tmp_path, body, needle):
    (tmp_path / "s.csv").write_text(body)
    (tmp_path / "s.accounts.csv").write_text("code,label,macro\nA,a,A\nB,b,A\n")
    with pytest.raises(SamFormatError, match=needle) as err:
        load_sam(tmp_path / "s.csv")
    assert "s.csv" in str(err.value)


def test_identity_aggregation_is_a_no_op(data_dir):
    sam = load_sam(data_dir / "model_sam.csv")
    agg = aggregate(sam, AggregationMap.identity(sam))
    assert agg.codes == sam.codes
    assert np.array_equal(agg.flows, sam.flows)


def test_mini_map_aggregation(data_dir):
    sam = load_sam(data_dir / "mini_sam.csv")
    amap = load_aggregation_map(data_dir / "mini_map.csv")
    agg = aggregate(sam, amap)
    assert len(agg) == 12
    assert validate(agg) == []
    # intra-group flows land on the diagonal; the total is preserved exactly
    assert agg.grand_total() == sam.grand_total()
    assert agg.cell("C_WAT", "I_WAT") == sam.cell("C_WAT", "I_WAT")
    assert agg.account("C_AGF").label == "Agri-food goods"
    amap.require_preserved(["C_WAT", "I_WAT"])


def test_preserved_account_cannot_merge():
    with pytest.raises(ContractError, match="preserved"):
        AggregationMap({"W": "X", "V": "X"}, frozenset({"W"}))


def test_unmapped_and_mixed_macro_rejected(data_dir):
    sam = load_sam(data_dir / "mini_sam.csv")
    entries = {c: c for c in sam.codes}
    entries.pop("ROW")
    with pytest.raises(ContractError, match="unmapped"):
        aggregate(sam, AggregationMap(entries))
    entries = {c: c for c in sam.codes}
    entries["LAB"] = "HH"
    with pytest.raises(ContractError, match="macro"):
        aggregate(sam, AggregationMap(entries))


@st.composite
def balanced_sams(draw):
    n = draw(st.integers(2, 6))
    cells = draw(st.lists(st.integers(0, 50), min_size=n * n, max_size=n * n))
    f = np.array(cells, dtype=float).reshape(n, n)
    # symmetrise the off-diagonal circulation so every account balances
    f = f + f.T
    acc = tuple(AccountId(f"A{k}", f"a{k}", "A") for k in range(n))
    groups = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    return Sam(acc, f), {f"A{k}": f"G{g}" for k, g in enumerate(groups)}


@settings(max_examples=50, deadline=None)
@given(balanced_sams())
def test_aggregation_preserves_balance_and_total(case):
    sam, entries = case
    agg = aggregate(sam, AggregationMap(entries))
    assert validate(agg) == []
    assert agg.grand_total() == sam.grand_total()
