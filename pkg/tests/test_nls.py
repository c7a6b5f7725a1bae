import numpy as np
import pytest

from gpboard.errors import StepOverflow
from gpboard.numerics.grid import (
    Grid,
    mass,
    nls_energy,
    nls_flow,
    nls_order_study,
    nls_trajectory,
    plane_wave,
    plane_wave_solution,
    random_field,
)


def test_plane_wave_is_exact():
    g = Grid(1, 64)
    f = plane_wave(g, 1, 0.3)
    out = nls_flow(f, 1.0, 0.1, 1e-3)
    exact = plane_wave_solution(g, 1, 0.3, 1.0, 0.1)
    assert np.max(np.abs(out.values - exact.values)) < 1e-10


def test_plane_wave_in_two_dimensions():
    g = Grid(2, 16)
    out = nls_flow(plane_wave(g, 1, 0.5), -1.0, 0.2, 0.01)
    exact = plane_wave_solution(g, 1, 0.5, -1.0, 0.2)
    assert np.max(np.abs(out.values - exact.values)) < 1e-10


def test_mass_and_energy_are_conserved():
    g = Grid(1, 64)
    f0 = random_field(g, 0, max_mode=4)
    f1 = nls_flow(f0, 1.0, 0.1, 1e-4)
    assert abs(mass(f1) - mass(f0)) / mass(f0) < 1e-10
    e0 = nls_energy(f0, 1.0)
    assert abs(nls_energy(f1, 1.0) - e0) / abs(e0) < 1e-6


def test_zero_time_and_bad_arguments():
    g = Grid(1, 16)
    f = random_field(g, 1)
    assert nls_flow(f, 1.0, 0.0, 0.1) is f
    with pytest.raises(ValueError):
        nls_flow(f, 1.0, -0.1, 0.01)
    with pytest.raises(ValueError):
        nls_flow(f, 1.0, 0.1, 0.0)
    with pytest.raises(StepOverflow):
        nls_flow(f, 1.0, 1.0, 1e-3, max_steps=100)


def test_linear_limit_matches_free_flow():
    g = Grid(1, 32)
    f = random_field(g, 2)
    out = nls_flow(f, 0.0, 0.3, 0.05)
    free = np.fft.ifft(np.fft.fft(f.values) * g.propagator(0.3))
    np.testing.assert_allclose(out.values, free, atol=1e-12)


def test_trajectory_keeps_requested_order():
    g = Grid(1, 32)
    f = random_field(g, 4, max_mode=3)
    late, early = nls_trajectory(f, 1.0, [0.2, 0.1], 0.01)
    np.testing.assert_allclose(early.values, nls_flow(f, 1.0, 0.1, 0.01).values, atol=1e-12)
    np.testing.assert_allclose(late.values, nls_flow(f, 1.0, 0.2, 0.01).values, atol=1e-12)


def test_splitting_is_second_order():
    study = nls_order_study(Grid(1, 64), 1.0)
    assert len(study.orders) == 3
    assert 1.8 <= study.order <= 2.2
    assert list(study.errors) == sorted(study.errors, reverse=True)


def test_order_study_needs_two_steps():
    with pytest.raises(ValueError):
        nls_order_study(Grid(1, 16), dts=(0.1,))
