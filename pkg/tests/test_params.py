import numpy as np
import pytest

from spinshuttle.errors import ConfigError, DomainError
from spinshuttle.params import (
    GeometryParams,
    PhysicalParams,
    TimeGrid,
    clock_frequency,
    grid_for_shuttle,
    shuttle_duration,
    shuttling_frequency,
    signal_period,
)


def test_shuttling_frequency_reference_points():
    assert shuttling_frequency(20.0, 100.0) == pytest.approx(50.0, abs=1e-12)
    assert clock_frequency(20.0, 100.0) == pytest.approx(200.0, abs=1e-12)
    assert shuttling_frequency(4.0, 100.0) == pytest.approx(10.0, abs=1e-12)
    assert clock_frequency(4.0, 100.0) == pytest.approx(40.0, abs=1e-12)
    # linear in v_avg and 1/l_pitch
    assert shuttling_frequency(8.0, 200.0) == pytest.approx(10.0, abs=1e-12)


def test_shuttling_frequency_domain_errors():
    with pytest.raises(DomainError):
        shuttling_frequency(0.0, 100.0)
    with pytest.raises(DomainError):
        shuttling_frequency(10.0, -1.0)


def test_frequency_period_velocity_round_trip():
    for v in (3.7, 5.0, 12.0, 20.0):
        for lp in (70.0, 100.0, 200.0):
            period = signal_period(v, lp)
            assert 4 * lp / period == pytest.approx(v, rel=1e-14)


def test_shuttle_duration_table():
    assert shuttle_duration(10000.0, 20.0) == pytest.approx(0.50)
    assert shuttle_duration(10000.0, 5.0) == pytest.approx(2.00)
    assert round(shuttle_duration(10000.0, 10.0), 2) == 1.00
    assert round(shuttle_duration(10000.0, 15.0), 2) == 0.67
    with pytest.raises(DomainError):
        shuttle_duration(0.0, 10.0)


def test_geometry_period_count():
    geom = GeometryParams(l_pitch=100.0, distance=10000.0)
    assert geom.spatial_period == 400.0
    assert geom.n_periods == 25
    with pytest.raises(ConfigError):
        GeometryParams(l_pitch=100.0, distance=10050.0)


def test_physical_params_invariants():
    phys = PhysicalParams()
    assert phys.zeeman_energy >= 0
    assert phys.zeeman_energy == pytest.approx(2.0 * 57.88381963 * 0.05)
    assert phys.valley_spin_coupling == pytest.approx(0.25 * 1e-3 * phys.zeeman_energy)
    with pytest.raises(DomainError):
        PhysicalParams(t_1v=0.0)
    with pytest.raises(DomainError):
        PhysicalParams(b_z=-0.1)


def test_time_grid():
    grid = TimeGrid.for_duration(500.0, 0.1)
    assert grid.n_samples == 5001
    assert grid.t_final == pytest.approx(500.0)
    t = grid.times()
    assert t[0] == 0.0
    assert np.allclose(np.diff(t), 0.1)
    assert grid.nyquist_hz == pytest.approx(5e9)
    with pytest.raises(DomainError):
        TimeGrid(dt=0.0, n_samples=10)


def test_grid_covers_shuttle():
    geom = GeometryParams(l_pitch=100.0, distance=10000.0)
    grid = grid_for_shuttle(geom, 15.0)
    # never extends past the schedule, at most one sample short
    assert grid.t_final <= geom.distance / 15.0 + 1e-9
    assert geom.distance / 15.0 - grid.t_final < 2 * grid.dt
