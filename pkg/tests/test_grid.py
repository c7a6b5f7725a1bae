import math

import numpy as np
import pytest

from gpboard.errors import StepOverflow
from gpboard.numerics.grid import (
    Grid,
    GridField,
    bessel_potential,
    free_propagate,
    gaussian_bump,
    mass,
    nls_energy,
    plane_wave,
    random_field,
    sobolev_norm,
)


@pytest.mark.parametrize("kwargs", [{"d": 4}, {"n": 4}, {"n": 48}, {"length": 0.0}])
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        Grid(**kwargs)


def test_grid_geometry():
    g = Grid(2, 16, 4.0)
    assert g.shape == (16, 16)
    assert g.size == 256
    assert g.dx == pytest.approx(0.25)
    assert g.dv == pytest.approx(0.0625)
    assert Grid(1, 8).mode_index.tolist() == [0, 1, 2, 3, 4, 3, 2, 1]


def test_fields_are_read_only_and_shape_checked():
    g = Grid(1, 16)
    f = plane_wave(g, 1)
    with pytest.raises(ValueError):
        f.values[0] = 0.0
    with pytest.raises(ValueError):
        GridField(g, np.zeros(8))
    with pytest.raises(ValueError):
        plane_wave(Grid(2, 16), (1, 2, 3))


def test_plane_wave_norms():
    g = Grid(1, 32)
    f = plane_wave(g, 1, 0.5)
    assert f.l2_norm() == pytest.approx(0.5 * math.sqrt(2 * math.pi))
    assert f.h1_norm() == pytest.approx(math.sqrt(2) * f.l2_norm())
    assert sobolev_norm(f, 0.0) == pytest.approx(f.l2_norm())
    assert mass(f) == pytest.approx(0.25 * 2 * math.pi)
    expected = 0.5 * 0.25 * 2 * math.pi + 0.25 * 2.0 * 0.5**4 * 2 * math.pi
    assert nls_energy(f, 2.0) == pytest.approx(expected)


def test_free_propagation_is_a_unitary_group():
    g = Grid(1, 64)
    f = random_field(g, 3)
    a, b = 0.3, -0.7
    composed = free_propagate(free_propagate(f, a), b)
    direct = free_propagate(f, a + b)
    np.testing.assert_allclose(composed.values, direct.values, atol=1e-12)
    assert free_propagate(f, a).l2_norm() == pytest.approx(f.l2_norm())
    assert free_propagate(f, 0.0) is f


def test_free_propagation_of_plane_wave_is_a_phase():
    g = Grid(2, 16)
    f = plane_wave(g, (1, 2))
    out = free_propagate(f, 0.4)
    np.testing.assert_allclose(out.values, np.exp(-0.4j * 5) * f.values, atol=1e-12)


def test_bessel_potential_inverts():
    g = Grid(1, 32)
    f = random_field(g, 1)
    back = bessel_potential(bessel_potential(f, 2.0), -2.0)
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)
    assert bessel_potential(f, 1.0).l2_norm() == pytest.approx(f.h1_norm())


def test_random_field_is_band_limited_and_seeded():
    g = Grid(1, 64)
    f = random_field(g, 7, norm=0.8, max_mode=5)
    assert f.l2_norm() == pytest.approx(0.8)
    assert np.all(np.abs(f.spectrum[g.mode_index > 5]) < 1e-12)
    np.testing.assert_array_equal(random_field(g, 7, norm=0.8, max_mode=5).values, f.values)
    assert random_field(g, 7, norm=None).l2_norm() != pytest.approx(1.0)


def test_gaussian_bump_peaks_in_the_middle():
    g = Grid(1, 32)
    bump = gaussian_bump(g)
    assert np.argmax(np.abs(bump.values)) == 16
    assert np.max(np.abs(bump.values)) == pytest.approx(1.0)


def test_field_arithmetic():
    g = Grid(1, 16)
    f, h = plane_wave(g, 1), plane_wave(g, 2)
    np.testing.assert_allclose((f * f.conj()).values, np.ones(16), atol=1e-14)
    np.testing.assert_allclose((f + h - h).values, f.values, atol=1e-14)
    assert f.scaled(2.0).l2_norm() == pytest.approx(2 * f.l2_norm())


def test_step_overflow_is_an_overflow_error():
    assert issubclass(StepOverflow, OverflowError)
