import numpy as np
import pytest

from swym.geometry import (
    build_chart,
    lapse,
    potential_factor,
    potential_factor_x,
    radius_offset,
    radius_r,
    tortoise_x,
)


def test_lapse_closed_values():
    assert lapse(1.0) == 0.0
    assert lapse(2.0) == 0.5
    assert lapse(np.array([4.0]))[0] == 0.75


def test_potential_factor_closed_values():
    # (r - 1) / r**3
    assert potential_factor(1.0) == 0.0
    assert potential_factor(2.0) == 0.125
    r = np.array([3.0, 10.0])
    np.testing.assert_allclose(potential_factor(r), (r - 1.0) / r**3,
                               rtol=0, atol=0)


def test_tortoise_at_two():
    # x = r + log(r - 1) vanishes the log at r = 2
    assert tortoise_x(2.0) == 2.0


def test_tortoise_monotone():
    r = np.geomspace(1.0 + 1e-10, 1e8, 5000)
    x = tortoise_x(r)
    assert np.all(np.diff(x) > 0.0)


def test_roundtrip_relative_error():
    r = np.geomspace(1.0 + 1e-8, 1e6, 40000)
    back = radius_r(tortoise_x(r))
    assert np.max(np.abs(back - r) / r) <= 1e-12


def test_roundtrip_scalar():
    assert radius_r(tortoise_x(5.0)) == pytest.approx(5.0, rel=1e-14)


def test_radius_offset_near_horizon():
    # r - 1 ~ exp(x - 1) deep in the throat, far below 1 ulp of r itself
    x = -300.0
    off = radius_offset(x)
    assert off == pytest.approx(np.exp(x - 1.0), rel=1e-10)
    assert 0.0 < off < 1e-130


def test_radius_offset_underflow_guard():
    with pytest.raises(ValueError):
        radius_offset(-800.0)


def test_potential_factor_x_deep_throat():
    # representable but far below the spacing of doubles at r = 1
    val = potential_factor_x(-735.0)
    assert 0.0 < val < 1e-300


def test_potential_factor_x_matches_r_form():
    # away from the horizon r - 1 is well represented and both forms agree;
    # near it the r-form loses digits, which is the x-form's reason to exist
    x = np.linspace(0.0, 200.0, 500)
    np.testing.assert_allclose(potential_factor_x(x),
                               potential_factor(radius_r(x)),
                               rtol=1e-12, atol=0)


def test_potential_factor_x_near_horizon_asymptote():
    # u/(1+u)**3 ~ u ~ exp(x-1) to first order in the throat
    x = -30.0
    assert potential_factor_x(x) == pytest.approx(np.exp(x - 1.0), rel=1e-10)


def test_chart_shapes_and_bounds():
    chart = build_chart(1.5, 100.0, 257)
    assert chart.r_grid.shape == (257,)
    assert chart.r_grid[0] == 1.5 and chart.r_grid[-1] == 100.0
    assert np.all(np.diff(chart.x_grid) > 0.0)
    np.testing.assert_allclose(chart.p_grid,
                               potential_factor(chart.r_grid),
                               rtol=0, atol=0)


def test_below_horizon_rejected():
    with pytest.raises(ValueError):
        tortoise_x(0.5)
    with pytest.raises(ValueError):
        lapse(np.array([2.0, 0.99]))
