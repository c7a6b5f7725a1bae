import numpy as np
import pytest

from gpboard.numerics.definetti import (
    DiscreteMeasure,
    admissibility_residual,
    chebyshev_support,
    h_trace,
    hermiticity_residual,
    min_gram_eigenvalue,
    mixture_hierarchy,
    mixture_kernel,
    rank_one,
    symmetry_residual,
)
from gpboard.numerics.grid import Grid, plane_wave, random_field
from gpboard.numerics.lowrank import trace_norm


@pytest.fixture
def grid():
    return Grid(1, 16)


@pytest.fixture
def measure(grid):
    rng = np.random.default_rng(0)
    return DiscreteMeasure(tuple((w, random_field(grid, rng)) for w in (0.2, 0.5, 0.3)))


def test_measure_validation(grid):
    f = random_field(grid, 1)
    with pytest.raises(ValueError):
        DiscreteMeasure(())
    with pytest.raises(ValueError):
        DiscreteMeasure(((1.5, f), (-0.5, f)))
    with pytest.raises(ValueError):
        DiscreteMeasure(((0.5, f), (0.4, f)))
    with pytest.raises(ValueError):
        DiscreteMeasure(((1.0, f.scaled(2.0)),))
    with pytest.raises(ValueError):
        DiscreteMeasure(((0.5, f), (0.5, random_field(Grid(1, 32), 1))))
    uniform = DiscreteMeasure.uniform([f, f.conj()])
    assert uniform.weights.tolist() == [0.5, 0.5]
    assert uniform.grid == grid


def test_zero_weight_atoms_leave_the_support(grid):
    f, h = random_field(grid, 1), random_field(grid, 2)
    mu = DiscreteMeasure(((1.0, f), (0.0, h)))
    assert len(mu.support()) == 1


def test_rank_one_is_a_projector(grid):
    f = random_field(grid, 3)
    p = rank_one(f)
    np.testing.assert_allclose(p @ p, p, atol=1e-12)
    assert np.trace(p) == pytest.approx(1.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_mixtures_are_admissible(measure, k):
    res, norm = admissibility_residual(measure, k)
    assert res / norm < 1e-12
    assert min_gram_eigenvalue(measure, k) > -1e-12


@pytest.mark.parametrize("k", [2, 3])
def test_mixtures_are_hermitian_and_symmetric(measure, k):
    gamma = mixture_hierarchy(measure, k)
    ref = gamma.hs_norm()
    assert hermiticity_residual(gamma) / ref < 1e-10
    assert symmetry_residual(gamma) / ref < 1e-10


def test_trace_on_unit_ball(grid):
    mu = DiscreteMeasure(((1.0, random_field(grid, 4, norm=0.8)),))
    for k in (1, 2, 3):
        assert mixture_hierarchy(mu, k).trace().real == pytest.approx(0.8 ** (2 * k))
    with pytest.raises(ValueError):
        mixture_hierarchy(mu, 0)


def test_mixture_kernel_is_positive(measure):
    kern = mixture_kernel(measure)
    assert kern.is_hermitian()
    assert trace_norm(kern) == pytest.approx(kern.trace().real)
    assert kern.trace().real == pytest.approx(1.0)


def test_chebyshev_roots_reach_the_support_bound(grid):
    f1, f2 = random_field(grid, 5), random_field(grid, 6)
    mu = DiscreteMeasure(((0.5, f1.scaled(1 / f1.h1_norm())), (0.5, f2.scaled(2 / f2.h1_norm()))))
    order = 20
    cheb = chebyshev_support(mu, order)
    assert cheb.bound == pytest.approx(2.0)
    assert cheb.monotone and cheb.within_bound
    assert cheb.roots[-1] == pytest.approx((0.5 * (1 + 4.0**order)) ** (1 / (2 * order)))
    assert cheb.moments[0] == pytest.approx(2.5)
    with pytest.raises(ValueError):
        chebyshev_support(mu, 0)


def test_h_trace_matches_moments(grid):
    wave = plane_wave(grid, 2, 0.3)
    mu = DiscreteMeasure(((1.0, wave),))
    h1 = wave.h1_norm()
    assert h_trace(mu, 1) == pytest.approx(h1**2)
    assert h_trace(mu, 2) == pytest.approx(h1**4)
    assert h_trace(mu, 1, alpha=0.0) == pytest.approx(wave.l2_norm() ** 2)
    with pytest.raises(ValueError):
        h_trace(mu, 0)
