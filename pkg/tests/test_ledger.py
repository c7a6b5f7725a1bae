import math
from fractions import Fraction

import pytest

from gpboard.boardgame import CollapseMap, enumerate_collapse_maps
from gpboard.ledger import critical_horizon, final_bound, ledger_for


def test_worked_example_shape():
    ledger = ledger_for(CollapseMap(1, (1, 2, 3)))
    (tree,) = ledger.trees
    assert tree.kind == "distinguished"
    assert (tree.pow2, tree.pow_c, tree.pow_t, tree.phi_exp) == (3, 3, Fraction(1), 8)
    closed = ledger.closing_integral()
    assert closed.shape() == "8 C^3 T^2 M^8"
    assert closed.value(0.25, 1.0, 1.0) == pytest.approx(8 * 0.25**2)


def test_bare_and_regular_trees():
    ledger = ledger_for(CollapseMap(3, (2, 2, 3, 5)))
    kinds = [t.kind for t in ledger.trees]
    assert kinds == ["bare", "distinguished", "regular"]
    bare, dist, regular = ledger.trees
    assert bare.phi_exp == 2 and bare.pow_t == 0
    assert dist.pow_t == Fraction(1)
    assert regular.pow_t == Fraction(1, 2)
    assert regular.phi_exp == 2 * 2


@pytest.mark.parametrize("k,r", [(1, 2), (2, 3), (3, 2), (1, 5)])
def test_totals_depend_only_on_k_and_r(k, r):
    for m in enumerate_collapse_maps(k, r):
        closed = ledger_for(m).closing_integral()
        assert closed.pow2 == r
        assert closed.pow_c == r
        assert closed.pow_t == Fraction(r + 1, 2)
        assert closed.phi_exp == 2 * (k + r)


def test_rows_end_with_total():
    rows = ledger_for(CollapseMap(2, (1, 1))).rows()
    assert [row["tree"] for row in rows] == [1, 2, "total"]
    assert rows[-1]["powT"] == "1/2"
    assert set(rows[0]) == {"tree", "m", "kind", "pow2", "powC", "powT", "phi_exp"}


def test_final_bound_formula():
    assert final_bound(1, 0, 0.25, 1.0, 1.0) == pytest.approx(2 * math.sqrt(0.5))
    assert final_bound(2, 3, 0.1, 2.0, 0.5) == pytest.approx(2 * 4 * (2 * 0.5 * 16 * 0.1) ** 2)
    with pytest.raises(ValueError):
        final_bound(0, 1, 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        final_bound(1, -1, 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        final_bound(1, 1, -0.1, 1.0, 1.0)


def test_bound_decays_below_critical_horizon():
    T = 0.9 * critical_horizon(1.0, 1.0)
    values = [final_bound(2, r, T, 1.0, 1.0) for r in range(12)]
    assert all(b < a for a, b in zip(values, values[1:]))
    above = 1.1 * critical_horizon(1.0, 1.0)
    assert final_bound(2, 10, above, 1.0, 1.0) > final_bound(2, 0, above, 1.0, 1.0)
    with pytest.raises(ValueError):
        critical_horizon(0.0, 1.0)
