import numpy as np
import pytest

from spinshuttle.errors import DegeneratePhasorError, DomainError, OracleAmbiguityError
from spinshuttle.params import GeometryParams, TimeGrid, signal_period
from spinshuttle.trajectory import (
    extract_trajectory,
    phasor,
    potential_minimum_oracle,
    trajectory_from_phase,
    unwrap_phase,
)
from spinshuttle.waveform import (
    DEFAULT_TAU_SET,
    PHASE_OFFSETS,
    ElectrodeWaveforms,
    RCSchedule,
    WaveformConfig,
    synthesize,
)

GEOM = GeometryParams(l_pitch=100.0, distance=2000.0)
T = signal_period(20.0, 100.0)


def sinusoid_waveforms(n_periods=5, amplitude=0.1, offset=0.0, dt=0.1):
    grid = TimeGrid.for_duration(n_periods * T, dt)
    t = grid.times()
    channels = np.array(
        [offset + amplitude * np.cos(2 * np.pi * t / T + p) for p in PHASE_OFFSETS]
    )
    return ElectrodeWaveforms(channels, grid)


def test_phasor_closed_forms():
    w = sinusoid_waveforms()
    z = phasor(w)
    t = w.grid.times()
    expected = 2 * 0.1 * np.exp(1j * 2 * np.pi * t / T)
    assert np.abs(z - expected).max() < 1e-12
    # equal DC on all channels cancels
    w_dc = sinusoid_waveforms(offset=0.7)
    assert np.abs(phasor(w_dc) - expected).max() < 1e-12
    # all-zero input gives the zero series
    w0 = ElectrodeWaveforms(np.zeros((4, 11)), TimeGrid(0.1, 11))
    assert np.all(phasor(w0) == 0)


class _ThreeChannel:
    def __init__(self):
        w = sinusoid_waveforms(1)
        self.channels = w.channels[:3]
        self.phase_offsets = PHASE_OFFSETS[:3]


def test_phasor_channel_count():
    with pytest.raises(DomainError):
        phasor(_ThreeChannel())


def test_unwrap_phase():
    theta = unwrap_phase(np.exp(1j * np.array([0.9 * np.pi, -0.9 * np.pi])))
    assert theta == pytest.approx([0.9 * np.pi, 1.1 * np.pi])
    z_const = np.full(10, 1.0 + 1.0j)
    assert np.allclose(np.diff(unwrap_phase(z_const)), 0.0)
    with pytest.raises(DegeneratePhasorError):
        unwrap_phase(np.array([1.0 + 0j, 0.0 + 0j, 1.0 + 0j]))


def test_trajectory_from_phase():
    grid = TimeGrid(0.1, 101)
    theta = 2 * np.pi * grid.times() / T + 0.3
    traj = trajectory_from_phase(theta, GEOM.spatial_period, grid)
    assert traj.x[0] == 0.0
    assert np.abs(traj.x - GEOM.spatial_period * grid.times() / T).max() < 1e-9
    assert np.allclose(traj.v, GEOM.spatial_period / T, rtol=1e-9)
    flat = trajectory_from_phase(np.full(11, 1.2), GEOM.spatial_period, TimeGrid(0.1, 11))
    assert np.all(flat.x == 0) and np.all(flat.v == 0)


def test_sinusoid_trajectory_linear():
    w = sinusoid_waveforms(10)
    geom = GeometryParams(l_pitch=100.0, distance=4000.0)
    traj = extract_trajectory(w, geom)
    lin = geom.spatial_period * w.grid.times() / T
    assert np.abs(traj.x - lin).max() < 1e-6 * geom.spatial_period


def test_rc_drive_net_advance_and_mean_velocity():
    for tau_index in range(4):
        rc = RCSchedule.from_taus(DEFAULT_TAU_SET, 1e-12, T, (tau_index,) * 5)
        grid = TimeGrid.for_duration(5 * T, 0.1)
        w = synthesize(WaveformConfig(0.1, 0.0, rc, grid, "analytic"))
        traj = extract_trajectory(w, GEOM)
        assert traj.x[-1] == pytest.approx(5 * GEOM.spatial_period, abs=1e-8)
        # mean velocity over integer periods equals L/T up to endpoint effects
        v_mean = traj.v.mean()
        assert v_mean == pytest.approx(GEOM.spatial_period / T, rel=1e-3)


def test_amplitude_and_offset_invariance():
    rng = np.random.default_rng(5)
    rc = RCSchedule.from_taus(DEFAULT_TAU_SET, 1e-12, T, (0, 2, 1, 3, 2))
    grid = TimeGrid.for_duration(5 * T, 0.1)
    w = synthesize(WaveformConfig(0.1, 0.0, rc, grid, "continuous"))
    x_ref = extract_trajectory(w, GEOM).x
    for _ in range(5):
        c = float(rng.uniform(0.1, 10.0))
        dc = float(rng.uniform(-1.0, 1.0))
        scaled = ElectrodeWaveforms(c * w.channels + dc, grid)
        x = extract_trajectory(scaled, GEOM).x
        assert np.abs(x - x_ref).max() < 1e-8


def test_oracle_agrees_with_phasor_for_sinusoid():
    w = sinusoid_waveforms(1)
    ref = potential_minimum_oracle(w, GEOM)
    fast = extract_trajectory(w, GEOM)
    assert np.abs(ref.x - fast.x).max() <= 5.0


def test_oracle_static_drive_constant():
    w = sinusoid_waveforms(1)
    frozen = ElectrodeWaveforms(np.tile(w.channels[:, :1], (1, w.grid.n_samples)), w.grid)
    ref = potential_minimum_oracle(frozen, GEOM, time_stride=20)
    assert np.abs(ref.x).max() < 1e-6


def test_oracle_mean_velocity():
    w = sinusoid_waveforms(5)
    ref = potential_minimum_oracle(w, GEOM, time_stride=5)
    v_avg = (ref.x[-1] - ref.x[0]) / w.grid.t_final
    assert v_avg == pytest.approx(GEOM.spatial_period / T, rel=0.01)


def test_oracle_ambiguity_on_flat_potential():
    grid = TimeGrid(0.1, 5)
    flat = ElectrodeWaveforms(np.zeros((4, 5)), grid)
    with pytest.raises(OracleAmbiguityError):
        potential_minimum_oracle(flat, GEOM)


def test_oracle_vs_phasor_rc_drive():
    rc = RCSchedule.from_taus(DEFAULT_TAU_SET, 1e-12, T, (0, 1, 2, 3, 1))
    grid = TimeGrid.for_duration(5 * T, 0.1)
    w = synthesize(WaveformConfig(0.1, 0.0, rc, grid, "continuous"))
    fast = extract_trajectory(w, GEOM)
    ref = potential_minimum_oracle(w, GEOM, time_stride=4)
    assert np.abs(ref.x - fast.x[::4]).max() <= 5.0


def test_trajectory_csv(tmp_path):
    w = sinusoid_waveforms(1)
    traj = extract_trajectory(w, GEOM)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_ns,x_nm,v_m_per_s"
    assert len(lines) == 1 + w.grid.n_samples
