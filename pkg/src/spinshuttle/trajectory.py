"""Mapping four-channel gate voltages to the quantum-dot trajectory.

The fast path projects the channels onto a complex phasor, unwraps its
argument and scales the accumulated phase by the spatial period. A slow
potential-minimum oracle (Gaussian lever-arm profiles per gate) serves as
an independent cross-check; it is validation-only and far too slow for
optimization loops.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePhasorError, DomainError, OracleAmbiguityError
from .params import GeometryParams, TimeGrid
from .waveform import ElectrodeWaveforms


@dataclass
class Trajectory:
    """Dot position x_qd(t) (nm) and velocity v(t) (m/s) on a time grid."""

    x: np.ndarray
    v: np.ndarray
    grid: TimeGrid

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_ns", "x_nm", "v_m_per_s"])
            for t, x, v in zip(self.grid.times(), self.x, self.v):
                writer.writerow([repr(float(t)), repr(float(x)), repr(float(v))])


def phasor(waveforms: ElectrodeWaveforms, phase_offsets=None) -> np.ndarray:
    """Complex phasor z(t) = sum_e V_e(t) exp(-i phi_e)."""
    channels = waveforms.channels
    if channels.shape[0] != 4:
        raise DomainError("phasor projection needs exactly four channels")
    offsets = waveforms.phase_offsets if phase_offsets is None else phase_offsets
    weights = np.exp(-1j * np.asarray(offsets, dtype=float))
    return weights @ channels


def unwrap_phase(z: np.ndarray, eps_mag: float | None = None) -> np.ndarray:
    """Continuous phase of z(t); consecutive steps mapped into (-pi, pi].

    Raises DegeneratePhasorError when |z| collapses below eps_mag (default
    1e-9 * max|z|): all four phases cancelled and the trajectory is
    physically undefined there.
    """
    mag = np.abs(z)
    if eps_mag is None:
        eps_mag = 1e-9 * float(mag.max(initial=0.0))
    if mag.size == 0 or float(mag.min()) <= eps_mag:
        raise DegeneratePhasorError(
            "phasor magnitude vanished; trajectory undefined at these samples"
        )
    return np.unwrap(np.angle(z))


def trajectory_from_phase(theta: np.ndarray, spatial_period: float, grid: TimeGrid) -> Trajectory:
    """x_qd(t) = (L / 2 pi) (theta(t) - theta(0)); v by central differences."""
    x = spatial_period / (2.0 * math.pi) * (theta - theta[0])
    v = np.gradient(x, grid.dt)
    return Trajectory(x, v, grid)


def extract_trajectory(waveforms: ElectrodeWaveforms, geom: GeometryParams) -> Trajectory:
    """Phasor-projection trajectory extraction (fast path)."""
    theta = unwrap_phase(phasor(waveforms))
    return trajectory_from_phase(theta, geom.spatial_period, waveforms.grid)


def gate_channel_wiring(gate_index: int) -> int:
    """Channel feeding the gate at x = gate_index * l_pitch.

    Every fourth gate shares a channel; the (-j) mod 4 assignment makes the
    traveling minimum move toward +x under the fixed phase offsets, matching
    the sign convention of the phasor projection.
    """
    return (-gate_index) % 4


def potential_minimum_oracle(
    waveforms: ElectrodeWaveforms,
    geom: GeometryParams,
    profile_width: float | None = None,
    search_step: float = 0.1,
    time_stride: int = 1,
) -> Trajectory:
    """Reference trajectory from tracking the minimum of the traveling potential.

    The potential is U(x, t) = -sum_gates V(t) G(x - x_gate) with a Gaussian
    lever-arm profile G of width profile_width (default: one gate pitch).
    The minimum is located per time sample by grid search at ``search_step``
    resolution plus parabolic refinement, then shifted so x_ref(0) = 0.
    """
    if profile_width is None:
        profile_width = geom.l_pitch
    if profile_width <= 0 or search_step <= 0:
        raise DomainError("profile width and search step must be positive")

    t = waveforms.grid.times()[::time_stride]
    volts = waveforms.channels[:, ::time_stride]
    L = geom.spatial_period
    half_window = 0.75 * L

    # Gates covering the shuttle range plus margin so edge gates never matter.
    pad = 6.0 * max(profile_width, geom.l_pitch)
    x_max_expected = geom.distance + half_window
    j_min = int(math.floor((-half_window - pad) / geom.l_pitch))
    j_max = int(math.ceil((x_max_expected + pad) / geom.l_pitch))
    gates_x = np.arange(j_min, j_max + 1) * geom.l_pitch
    gates_ch = np.array([gate_channel_wiring(j) for j in range(j_min, j_max + 1)])

    inv_two_w2 = 1.0 / (2.0 * profile_width * profile_width)
    offsets = np.arange(-half_window, half_window + search_step, search_step)

    x_ref = np.empty(t.size)
    center = 0.0
    for i in range(t.size):
        grid_x = center + offsets
        sel = (gates_x > grid_x[0] - pad) & (gates_x < grid_x[-1] + pad)
        gx = gates_x[sel]
        gv = volts[gates_ch[sel], i]
        d = grid_x[:, None] - gx[None, :]
        u = -(np.exp(-d * d * inv_two_w2) @ gv)
        k = int(np.argmin(u))
        if k == 0 or k == u.size - 1:
            raise OracleAmbiguityError(
                f"potential minimum ran into the search-window edge at t = {t[i]} ns"
            )
        _check_unique_minimum(u, k, grid_x, geom.l_pitch, t[i])
        # Parabolic refinement around the discrete minimum.
        denom = u[k + 1] - 2.0 * u[k] + u[k - 1]
        shift = 0.0 if denom <= 0 else 0.5 * (u[k - 1] - u[k + 1]) / denom
        x_ref[i] = grid_x[k] + shift * search_step
        center = x_ref[i]

    x_ref -= x_ref[0]
    dt = waveforms.grid.dt * time_stride
    v = np.gradient(x_ref, dt) if x_ref.size > 1 else np.zeros_like(x_ref)
    grid = TimeGrid(dt=dt, n_samples=x_ref.size) if x_ref.size >= 2 else waveforms.grid
    return Trajectory(x_ref, v, grid)


def _check_unique_minimum(u, k, grid_x, l_pitch, t_now):
    depth = float(u.max() - u.min())
    if depth <= 0:
        raise OracleAmbiguityError(f"flat potential at t = {t_now} ns; no unique minimum")
    interior = u[1:-1]
    local_min = (interior <= u[:-2]) & (interior <= u[2:])
    cand = np.where(local_min)[0] + 1
    near_best = cand[np.abs(u[cand] - u[k]) <= 1e-9 * depth]
    if np.any(np.abs(grid_x[near_best] - grid_x[k]) > 0.25 * l_pitch):
        raise OracleAmbiguityError(
            f"degenerate potential minima at t = {t_now} ns; trajectory ambiguous"
        )
