import pytest

from gpboard.boardgame import CollapseMap, enumerate_collapse_maps
from gpboard.errors import BareEdgeTree
from gpboard.trees import (
    Vertex,
    VertexKind,
    build_forest,
    extract_labeling,
    extract_labelings,
    reassemble,
    subtree_stats,
)


def test_worked_forest_k3():
    m = CollapseMap(3, (2, 2, 3, 5))
    forest = build_forest(m)
    assert forest.is_bare_edge(1)
    assert forest.distinguished_tree == 2
    tau2 = extract_labeling(forest, 2)
    assert tau2.sigma == (1, 1, 3)
    assert tau2.time_binding == (1, 2, 4)
    assert tau2.distinguished
    tau3 = extract_labeling(forest, 3)
    assert tau3.sigma == (1,)
    assert not tau3.distinguished
    assert tau2.operators() == [(2, 4), (2, 5), (5, 7)]


def test_bare_edge_has_no_labeling():
    forest = build_forest(CollapseMap(3, (2, 2, 3, 5)))
    with pytest.raises(BareEdgeTree):
        extract_labeling(forest, 1)
    with pytest.raises(ValueError):
        extract_labeling(forest, 4)
    assert set(extract_labelings(forest)) == {2, 3}


def test_kappa_relations_of_seven_column_tree():
    lab = extract_labeling(build_forest(CollapseMap(1, (1, 1, 1, 2, 5, 6, 7))), 1)
    assert lab.m == 7
    assert lab.kappa_minus_of(1) == 2
    assert lab.kappa_plus_of(1) == 4
    assert lab.kappa_minus_of(2) == 3
    node = 1
    for _ in range(4):
        node = lab.kappa_plus_of(node)
    assert node == 7


def test_leaf_labels_and_distinguished_leaves():
    lab = extract_labeling(build_forest(CollapseMap(1, (1, 2, 3))), 1)
    assert lab.m == 3
    leaves = sorted(c for c in lab.kept + lab.contracted if lab.is_leaf(c))
    assert leaves == [4, 5, 6, 7]
    assert lab.distinguished_leaves() == (lab.kept[2], lab.contracted[2])
    assert all(lab.time_index(leaf) == 3 for leaf in leaves)
    assert lab.distinguished_label == 3


def test_kappa_maps_follow_kept_and_contracted_children():
    for m in enumerate_collapse_maps(2, 4):
        for lab in extract_labelings(build_forest(m)).values():
            for alpha in range(1, lab.m + 1):
                assert lab.kappa_minus_of(alpha) == lab.kept[alpha - 1]
                assert lab.kappa_plus_of(alpha) == lab.contracted[alpha - 1]


def test_kappa_maps_are_not_ordered_by_label():
    lab = extract_labeling(build_forest(CollapseMap(1, (1, 2, 1))), 1)
    assert lab.kappa_minus_of(1) == 3
    assert lab.kappa_plus_of(1) == 2
    ordered = extract_labeling(build_forest(CollapseMap(1, (1, 1, 1, 1, 1))), 1)
    assert ordered.kappa_minus_of(1) == 2
    assert ordered.kappa_plus_of(1) == 7


@pytest.mark.parametrize("k,r", [(1, 4), (2, 4), (3, 3)])
def test_reassemble_recovers_map(k, r):
    for m in enumerate_collapse_maps(k, r):
        assert reassemble(build_forest(m)) == m


def test_forest_shape_counts():
    for m in enumerate_collapse_maps(2, 4):
        forest = build_forest(m)
        columns = []
        for j in range(1, m.k + 1):
            internal = forest.internal_columns(j)
            columns.extend(internal)
            assert len(forest.leaves(j)) == len(internal) + 1
        assert sorted(columns) == list(range(1, m.r + 1))
        assert m.r in forest.internal_columns(forest.distinguished_tree)


def test_subtree_stats_of_root():
    lab = extract_labeling(build_forest(CollapseMap(1, (1, 2, 3))), 1)
    assert subtree_stats(lab, 1) == (3, 2)
    assert subtree_stats(lab, 3) == (1, 0)
    with pytest.raises(ValueError):
        subtree_stats(lab, 4)


def test_vertex_kinds_and_rendering():
    forest = build_forest(CollapseMap(1, (1, 1)))
    assert forest.kind(Vertex("w", 1)) is VertexKind.ROOT
    assert forest.kind(Vertex("v", 1)) is VertexKind.INTERNAL
    assert forest.kind(Vertex("u", 3)) is VertexKind.LEAF_DISTINGUISHED
    dot = forest.to_dot()
    assert dot.startswith("digraph forest {")
    assert "doublecircle" in dot
    lines = forest.adjacency_lines()
    assert lines[0] == "tree 1 (distinguished)"
    assert any("B_{1,2}" in line for line in lines)


@pytest.mark.parametrize("k,r", [(1, 5), (2, 4), (3, 3)])
def test_echelon_forms_give_nondecreasing_sigma(k, r):
    for m in enumerate_collapse_maps(k, r):
        if not m.is_upper_echelon():
            continue
        for lab in extract_labelings(build_forest(m)).values():
            assert list(lab.sigma) == sorted(lab.sigma), (m.rho, lab.j)
