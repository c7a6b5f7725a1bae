import math

import pytest

from gpboard.boardgame import (
    CollapseMap,
    EchelonForm,
    SimplexDomain,
    apply_move,
    applicable_moves,
    class_table,
    count_collapse_maps,
    enumerate_collapse_maps,
    identity_permutation,
    move_applicable,
    move_graph_echelon_forms,
    partition_classes,
    reduce_to_echelon,
    revert_move,
    time_domain,
)
from gpboard.errors import EnumerationCapExceeded, InapplicableMove


def test_collapse_map_rejects_out_of_range_rows():
    with pytest.raises(ValueError):
        CollapseMap(1, (2,))
    with pytest.raises(ValueError):
        CollapseMap(1, (1, 0))
    with pytest.raises(ValueError):
        CollapseMap(0, (1,))
    with pytest.raises(ValueError):
        CollapseMap(2, ())


def test_parse_and_describe():
    m = CollapseMap.parse(3, "2, 2,3,5")
    assert m.rho == (2, 2, 3, 5)
    assert m.r == 4
    assert m.operators() == [(2, 4), (2, 5), (3, 6), (5, 7)]
    assert m.describe() == "B_{2,4} B_{2,5} B_{3,6} B_{5,7}"
    with pytest.raises(ValueError):
        CollapseMap.parse(1, "1,x")


def test_echelon_form_requires_nondecreasing_rows():
    assert EchelonForm(1, (1, 1, 2)).is_upper_echelon()
    with pytest.raises(ValueError):
        EchelonForm(1, (1, 2, 1))


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_count_matches_enumeration(k, r):
    maps = enumerate_collapse_maps(k, r)
    assert len(maps) == count_collapse_maps(k, r) == math.prod(k + c - 1 for c in range(1, r + 1))
    assert len(set(maps)) == len(maps)
    assert [m.rho for m in maps] == sorted(m.rho for m in maps)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapExceeded) as info:
        enumerate_collapse_maps(3, 5, cap=100)
    assert info.value.count == 2520
    assert isinstance(info.value, ValueError)


def test_enumeration_rejects_bad_sizes():
    with pytest.raises(ValueError):
        enumerate_collapse_maps(0, 2)
    with pytest.raises(ValueError):
        enumerate_collapse_maps(1, 0)


def test_single_move_example():
    m = CollapseMap(1, (1, 2, 1))
    assert move_applicable(m, 2)
    assert applicable_moves(m) == [2]
    moved, pi = apply_move(m, identity_permutation(3), 2)
    assert moved.rho == (1, 1, 2)
    assert pi == (1, 3, 2)


def test_move_relabels_later_columns():
    assert not move_applicable(CollapseMap(1, (1, 1, 2, 3)), 1)
    m = CollapseMap(1, (1, 2, 1, 3))
    moved, pi = apply_move(m, identity_permutation(4), 2)
    # rows 3 and 4 swap in the columns after the exchanged pair
    assert moved.rho == (1, 1, 2, 4)
    assert pi == (1, 3, 2, 4)


def test_inapplicable_move_raises():
    form = CollapseMap(1, (1, 1, 2))
    assert applicable_moves(form) == []
    with pytest.raises(InapplicableMove):
        apply_move(form, identity_permutation(3), 1)
    with pytest.raises(InapplicableMove):
        apply_move(form, identity_permutation(3), 3)
    with pytest.raises(ValueError):
        apply_move(CollapseMap(1, (1, 2, 1)), (1, 1, 2), 2)


def test_revert_undoes_move():
    m = CollapseMap(2, (2, 1, 3))
    pi = identity_permutation(3)
    assert applicable_moves(m) == [1]
    for col in applicable_moves(m):
        moved, moved_pi = apply_move(m, pi, col)
        assert revert_move(moved, moved_pi, col) == (m, pi)
    with pytest.raises(InapplicableMove):
        revert_move(m, pi, 1)


def test_reduce_to_echelon_trace_replays():
    m = CollapseMap(1, (1, 2, 3, 1))
    form, trace = reduce_to_echelon(m)
    assert form.is_upper_echelon()
    assert trace.replay(m) == (CollapseMap(form.k, form.rho), trace.pi)
    back, pi = trace.unwind(form)
    assert back == m
    assert pi == identity_permutation(4)


def test_echelon_form_is_fixed_point():
    form, trace = reduce_to_echelon(CollapseMap(2, (1, 2, 2, 4)))
    assert form.rho == (1, 2, 2, 4)
    assert trace.moves == ()
    assert trace.pi == (1, 2, 3, 4)


def test_k1_r3_has_five_classes():
    classes = partition_classes(1, 3)
    assert len(classes) == 5
    assert sum(len(c) for c in classes.values()) == 6
    merged = [c for c in classes.values() if len(c) > 1]
    assert len(merged) == 1
    assert merged[0].form.rho == (1, 1, 2)
    assert sorted(merged[0].perms) == [(1, 2, 3), (1, 3, 2)]


@pytest.mark.parametrize("k,r", [(1, 4), (2, 3), (2, 4), (3, 3)])
def test_classes_match_move_graph_oracle(k, r):
    classes = partition_classes(k, r)
    oracle = move_graph_echelon_forms(k, r)
    for form, cls in classes.items():
        perms = cls.perms
        assert len(set(perms)) == len(perms)
        for member in cls.members:
            assert oracle[member.source] == (form.rho,)
    assert len(classes) <= 2 ** (k + r)


def test_class_domains_tile_the_cube():
    t = 0.7
    classes = partition_classes(2, 3)
    total = sum(time_domain(cls, t).volume for cls in classes.values())
    assert total == pytest.approx(count_collapse_maps(2, 3) * t**3 / 6)


def test_simplex_domain_validation():
    with pytest.raises(ValueError):
        SimplexDomain(-1.0, 2, ((1, 2),))
    with pytest.raises(ValueError):
        SimplexDomain(1.0, 2, ((1, 2), (1, 2)))
    with pytest.raises(ValueError):
        SimplexDomain(1.0, 2, ((1, 3),))
    assert SimplexDomain(2.0, 2, ((1, 2), (2, 1))).volume == pytest.approx(4.0)


def test_class_table_rows():
    rows = class_table(2, 3)
    assert rows[0] == (1, 1, 1, 1, 4)
    assert (1, 3, 6, 5, 16) in rows
    for k, r, maps, classes, bound in rows:
        assert maps == count_collapse_maps(k, r)
        assert classes <= bound == 2 ** (k + r)
