import numpy as np
import pytest

from gpboard.boardgame import CollapseMap, enumerate_collapse_maps, partition_classes
from gpboard.errors import GridTooLarge, InapplicableMove
from gpboard.numerics.definetti import DiscreteMeasure, rank_one
from gpboard.numerics.grid import Grid, GridField, free_propagate, plane_wave, random_field
from gpboard.numerics.verify import (
    ResidualReport,
    chunk_for,
    conjugate_by_propagator,
    free_leaves,
    integrate_map,
    strichartz_ratio,
    strichartz_ratio_probe,
    trace_norm_oracle,
    verify_duhamel_expansion,
    verify_factorization,
    verify_full_sum,
    verify_mild_solution,
    verify_move_invariance,
    verify_resummation,
)


@pytest.fixture
def grid():
    return Grid(1, 16)


@pytest.fixture
def phi0(grid):
    return random_field(grid, 0, max_mode=3)


def test_residual_report_relative_and_pass():
    rep = ResidualReport("x", {}, 1e-8, 2.0, 1e-6)
    assert rep.relative == pytest.approx(5e-9)
    assert rep.passed
    zero = ResidualReport("x", {}, 0.5, 0.0, 1e-6)
    assert zero.relative == 0.5 and not zero.passed
    assert rep.to_dict()["pass"] is True


def test_conjugation_moves_rank_one_projectors(grid, phi0):
    moved = conjugate_by_propagator(grid, rank_one(phi0), 0.4)
    np.testing.assert_allclose(moved, rank_one(free_propagate(phi0, 0.4)), atol=1e-12)


@pytest.mark.slow
@pytest.mark.timeout(120)
def test_single_move_leaves_integral_unchanged(grid, phi0):
    rep = verify_move_invariance(CollapseMap(1, (1, 2, 1)), 2, grid, phi0, 0.5, q=6)
    assert rep.passed, rep.to_dict()
    assert rep.params["moved"] == [1, 1, 2]
    with pytest.raises(InapplicableMove):
        verify_move_invariance(CollapseMap(1, (1, 1, 2)), 1, grid, phi0, 0.5, q=4)


@pytest.mark.slow
@pytest.mark.timeout(300)
def test_classes_resum_to_their_echelon_form(grid, phi0):
    for cls in partition_classes(1, 3).values():
        rep = verify_resummation(cls, grid, phi0, 0.5, q=6)
        assert rep.passed, rep.to_dict()
    rep = verify_full_sum(2, 2, grid, phi0, 0.5, q=6)
    assert rep.passed, rep.to_dict()


@pytest.mark.slow
@pytest.mark.timeout(120)
def test_tree_product_matches_dense_construction(grid, phi0):
    rng = np.random.default_rng(1)
    for k in (1, 2):
        for r in (1, 2, 3):
            for m in enumerate_collapse_maps(k, r):
                times = [0.5] + sorted(rng.uniform(0.0, 0.5, r), reverse=True)
                rep = verify_factorization(m, grid, phi0, times)
                assert rep.passed, rep.to_dict()
    with pytest.raises(ValueError):
        verify_factorization(CollapseMap(1, (1,)), grid, phi0, [0.5])


@pytest.mark.slow
@pytest.mark.timeout(300)
def test_mild_form_for_plane_wave(grid):
    mu = DiscreteMeasure(((1.0, plane_wave(grid, 1, 0.3)),))
    rep = verify_mild_solution(mu, 1, 1.0, 0.1, 1e-4, tol=1e-6)
    assert rep.check == "mild"
    assert rep.passed, rep.to_dict()


@pytest.mark.slow
@pytest.mark.timeout(300)
def test_second_order_expansion_of_a_mixture(grid):
    rng = np.random.default_rng(2)
    mu = DiscreteMeasure(
        tuple((0.5, random_field(grid, rng, norm=0.9, max_mode=3)) for _ in range(2))
    )
    rep = verify_duhamel_expansion(mu, 1, 2, 1.0, 0.1, 1e-4)
    assert rep.check == "duhamel"
    assert rep.passed, rep.to_dict()
    with pytest.raises(ValueError):
        verify_duhamel_expansion(mu, 1, 0, 1.0, 0.1, 1e-4)


def test_strichartz_ratio(grid):
    zero = GridField(grid, np.zeros(16))
    assert strichartz_ratio(zero, zero, zero, 1.0) == 0.0
    waves = [plane_wave(grid, mode, 0.2) for mode in (1, 2, 3)]
    ratio = strichartz_ratio(*waves, 1.0)
    assert 0 < ratio < np.inf
    stats = strichartz_ratio_probe([tuple(waves), (waves[0],) * 3], 1.0)
    assert stats.count == 2 and stats.n == 16
    assert stats.max_ratio >= stats.mean_ratio
    with pytest.raises(ValueError):
        strichartz_ratio_probe([], 1.0)


def test_trace_norm_oracle_agrees():
    worst, count = trace_norm_oracle(Grid(1, 16), samples=10, seed=3)
    assert count == 10
    assert worst < 1e-10


def test_batches_shrink_on_large_grids():
    assert chunk_for(Grid(1, 64), 512) == 512
    assert chunk_for(Grid(3, 16), 512) == 128
    assert chunk_for(Grid(3, 64), 512) == 2


def test_dense_factorization_refuses_large_grids():
    grid = Grid(3, 16)
    with pytest.raises(GridTooLarge):
        verify_factorization(
            CollapseMap(1, (1, 1, 1)), grid, random_field(grid, 0), [0.5, 0.4, 0.2, 0.1]
        )


@pytest.mark.slow
@pytest.mark.timeout(300)
def test_three_dimensional_move_stays_in_factor_form():
    grid = Grid(3, 8)
    phi0 = random_field(grid, 0, max_mode=2)
    m = CollapseMap(1, (1, 2, 1))
    side = integrate_map(m, grid, free_leaves(phi0), 0.5, q=3)
    assert side.k == 1 and len(side) == 1
    assert side.signs[0].shape[1] <= 2 * grid.size
    rep = verify_move_invariance(m, 2, grid, phi0, 0.5, q=3)
    assert rep.passed, rep.to_dict()
