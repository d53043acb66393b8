"""Physical constants, unit conventions, and shared experiment parameters.

Unit system (fixed): length in nm, time in ns, energy in ueV, magnetic
field in tesla, voltage in volt. Velocities are quoted in m/s, which is
numerically identical to nm/ns. Frequencies returned by the closed-form
estimators are in MHz; capacitances and the noise band are kept in SI
(farad, Hz) because they enter through SI-valued hardware quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

# Reduced Planck constant in ueV*ns and Bohr magneton in ueV/T. Values fixed
# as built-in constants so 4x4 dynamics stays near unity scale.
HBAR_UEV_NS = 0.6582119569
MU_B_UEV_PER_T = 57.88381963

SECONDS_PER_NS = 1e-9
N_PHASES = 4


@dataclass(frozen=True)
class PhysicalParams:
    """Spin and valley material parameters.

    The defaults for ``b_z`` and ``delta_g_over_g`` are arbitrary toolkit
    choices (no published values back them); override them from config for
    any quantitative study.
    """

    g_bar: float = 2.0
    delta_g_over_g: float = 1e-3
    b_z: float = 0.05  # tesla
    t_1v: float = 1e6  # ns (1 ms valley lifetime)
    hbar: float = HBAR_UEV_NS
    mu_b: float = MU_B_UEV_PER_T

    def __post_init__(self):
        if self.hbar <= 0 or self.mu_b <= 0:
            raise DomainError("hbar and mu_b must be positive")
        if self.t_1v <= 0:
            raise DomainError("valley relaxation time must be positive")
        if self.b_z < 0:
            raise DomainError("b_z must be non-negative")

    @property
    def zeeman_energy(self) -> float:
        """Zeeman splitting E_Z = g_bar * mu_B * B_z in ueV."""
        return self.g_bar * self.mu_b * self.b_z

    @property
    def valley_spin_coupling(self) -> float:
        """kappa_z = (1/4) (dg/g) E_Z in ueV."""
        return 0.25 * self.delta_g_over_g * self.zeeman_energy

    @property
    def frame_offset(self) -> float:
        """Rotating-frame correction gamma = -(1/2) (dg/g) |B_z| mu_B in ueV."""
        return -0.5 * self.delta_g_over_g * abs(self.b_z) * self.mu_b


@dataclass(frozen=True)
class GeometryParams:
    """Shuttling-channel geometry: gate pitch and total transport length (nm)."""

    l_pitch: float = 100.0
    distance: float = 10000.0

    def __post_init__(self):
        if self.l_pitch <= 0:
            raise DomainError("gate pitch must be positive")
        if self.distance <= 0:
            raise DomainError("shuttle distance must be positive")
        ratio = self.distance / self.spatial_period
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError(
                f"distance {self.distance} nm is not an integer multiple of the "
                f"spatial period {self.spatial_period} nm"
            )

    @property
    def n_phases(self) -> int:
        return N_PHASES

    @property
    def spatial_period(self) -> float:
        """One signal period advances the potential by L = 4 * l_pitch (nm)."""
        return N_PHASES * self.l_pitch

    @property
    def n_periods(self) -> int:
        """Number of signal periods (= configuration words) for the full shuttle."""
        return round(self.distance / self.spatial_period)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid t(i) = i * dt, dt in ns."""

    dt: float = 0.1
    n_samples: int = 2

    def __post_init__(self):
        if self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.n_samples < 2:
            raise DomainError("need at least two samples")

    @classmethod
    def for_duration(cls, duration: float, dt: float = 0.1) -> "TimeGrid":
        """Largest grid with t_final <= duration (up to rounding slack)."""
        if duration <= 0 or dt <= 0:
            raise DomainError("duration and dt must be positive")
        return cls(dt=dt, n_samples=int(math.floor(duration / dt + 1e-6)) + 1)

    @property
    def t_final(self) -> float:
        return (self.n_samples - 1) * self.dt

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / (self.dt * SECONDS_PER_NS)

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt


def shuttling_frequency(v_avg: float, l_pitch: float) -> float:
    """Waveform frequency f = v_avg / (4 l_pitch) in MHz.

    v_avg in m/s, l_pitch in nm. One signal period advances the traveling
    potential by four gate pitches.
    """
    if v_avg <= 0 or l_pitch <= 0:
        raise DomainError("v_avg and l_pitch must be positive")
    return 1000.0 * v_avg / (N_PHASES * l_pitch)


def clock_frequency(v_avg: float, l_pitch: float) -> float:
    """State-machine clock f_clk = 4 f (period discretized into 4 steps), MHz."""
    return N_PHASES * shuttling_frequency(v_avg, l_pitch)


def signal_period(v_avg: float, l_pitch: float) -> float:
    """Signal period T = 1/f in ns."""
    return 1000.0 / shuttling_frequency(v_avg, l_pitch)


def shuttle_duration(distance: float, v_avg: float) -> float:
    """Transport time distance / v_avg in us (distance in nm, v_avg in m/s)."""
    if distance <= 0 or v_avg <= 0:
        raise DomainError("distance and v_avg must be positive")
    return distance / v_avg / 1000.0


def grid_for_shuttle(geom: GeometryParams, v_avg: float, dt: float = 0.1) -> TimeGrid:
    """Time grid covering the full shuttle at velocity v_avg."""
    duration = geom.distance / v_avg  # ns since m/s == nm/ns
    return TimeGrid.for_duration(duration, dt)
