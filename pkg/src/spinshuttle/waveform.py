"""Four-phase gate-voltage synthesis from a per-period resistor schedule.

The signal generator charges a capacitive load through one of four
resistor-ladder settings, selected once per signal period. Two waveform
models are provided: ``analytic`` evaluates the closed-form exponential
ramp expression (which jumps by 2A*exp(-pi/tau) at the half-period
boundary), ``continuous`` enforces charge continuity by starting each
half-period ramp from the previous end value. Continuous is the default
for physics runs; a real RC node cannot jump.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError
from .params import SECONDS_PER_NS, TimeGrid

#: Fixed per-electrode phase offsets (rad): [0.25, 0.75, 1.25, 1.75] * pi.
PHASE_OFFSETS = tuple((0.25 + 0.5 * e) * math.pi for e in range(4))

#: Default dimensionless ramp time-constant set (documented toolkit choice,
#: not a published value).
DEFAULT_TAU_SET = (0.5, 0.8, 1.2, 1.8)


def tau_for_period(r_ohm: float, c_farad: float, period_ns: float) -> float:
    """Dimensionless ramp time constant tau = 2 pi R C / T."""
    if r_ohm <= 0 or c_farad <= 0 or period_ns <= 0:
        raise DomainError("R, C and T must all be positive")
    return 2.0 * math.pi * r_ohm * c_farad / (period_ns * SECONDS_PER_NS)


def resistors_for_taus(taus, c_farad: float, period_ns: float) -> tuple:
    """Resistor-ladder values (ohm) realizing the given tau set at period T."""
    if c_farad <= 0 or period_ns <= 0:
        raise DomainError("C and T must be positive")
    return tuple(t * period_ns * SECONDS_PER_NS / (2.0 * math.pi * c_farad) for t in taus)


@dataclass(frozen=True)
class RCSchedule:
    """Per-period resistor selection driving the ramp shape.

    resistor_values: the four ladder settings in ohm
    capacitance: effective load in farad
    period: signal period T in ns
    sequence: one ladder index in {0,1,2,3} per signal period
    """

    resistor_values: tuple
    capacitance: float
    period: float
    sequence: tuple

    def __post_init__(self):
        if len(self.resistor_values) != 4:
            raise ConfigError("exactly four resistor-ladder settings are required")
        if any(r <= 0 for r in self.resistor_values):
            raise DomainError("resistor values must be positive")
        if self.capacitance <= 0 or self.period <= 0:
            raise DomainError("capacitance and period must be positive")
        if len(self.sequence) == 0:
            raise ConfigError("empty resistor sequence")
        if any((not 0 <= int(g) <= 3) for g in self.sequence):
            raise ConfigError("sequence indices must be in {0, 1, 2, 3}")

    @classmethod
    def from_taus(cls, taus, capacitance: float, period: float, sequence) -> "RCSchedule":
        rs = resistors_for_taus(taus, capacitance, period)
        return cls(rs, capacitance, period, tuple(int(g) for g in sequence))

    @property
    def n_periods(self) -> int:
        return len(self.sequence)

    def taus(self) -> np.ndarray:
        """tau_p for each period of the sequence."""
        per_setting = np.array(
            [tau_for_period(r, self.capacitance, self.period) for r in self.resistor_values]
        )
        return per_setting[np.asarray(self.sequence, dtype=int)]


@dataclass(frozen=True)
class WaveformConfig:
    amplitude: float
    v_bias: float
    rc: RCSchedule
    grid: TimeGrid
    mode: str = "continuous"
    phase_offsets: tuple = PHASE_OFFSETS

    def __post_init__(self):
        if self.amplitude <= 0:
            raise DomainError("amplitude must be positive")
        if self.mode not in ("analytic", "continuous"):
            raise ConfigError(f"unknown waveform mode {self.mode!r}")
        off = np.asarray(self.phase_offsets, dtype=float)
        if off.shape != (4,) or not np.all(np.diff(off) > 0):
            raise ConfigError("need four strictly increasing phase offsets")
        if not np.allclose(np.diff(off), math.pi / 2, atol=1e-12):
            raise ConfigError("phase offsets must step by pi/2")
        covered = self.rc.n_periods * self.rc.period
        if covered < self.grid.t_final - 1e-9 * self.grid.dt:
            raise ConfigError(
                f"resistor sequence covers {covered} ns but the grid extends "
                f"to {self.grid.t_final} ns"
            )


@dataclass
class ElectrodeWaveforms:
    """Four sampled voltage channels V_e(t) on a shared time grid."""

    channels: np.ndarray  # shape (4, n_samples), volt
    grid: TimeGrid
    phase_offsets: tuple = PHASE_OFFSETS

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=float)
        if self.channels.shape != (4, self.grid.n_samples):
            raise ConfigError("channels must have shape (4, n_samples)")
        if not np.all(np.isfinite(self.channels)):
            raise DomainError("waveform samples must be finite")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_ns", "v1", "v2", "v3", "v4"])
            for i, t in enumerate(self.grid.times()):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in self.channels[:, i]])


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited additive voltage noise, a behavioral stand-in for
    circuit-internal electronic noise.

    sigma_v is the per-sample standard deviation at scale 1; runs mirroring
    the reference operating point use scale 0.1. The band edges are in Hz.
    """

    scale: float = 0.1
    sigma_v: float = 2.5e-4
    f_min: float = 0.0
    f_max: float = 5e9
    seed: int = 0

    def __post_init__(self):
        if self.scale < 0:
            raise DomainError("noise scale must be non-negative")
        if self.sigma_v < 0:
            raise DomainError("sigma_v must be non-negative")
        if not 0 <= self.f_min < self.f_max:
            raise DomainError("need 0 <= f_min < f_max")

    def with_seed(self, seed: int) -> "NoiseSpec":
        return replace(self, seed=int(seed))


def _period_index(t: np.ndarray, period: float, n_periods: int) -> np.ndarray:
    # tau switches exactly at t = p*T; the final grid point folds into the
    # last period.
    idx = np.floor(t / period + 1e-9).astype(np.int64)
    return np.clip(idx, 0, n_periods - 1)


def _ramp_value(psi: np.ndarray, tau: np.ndarray, amplitude: float) -> np.ndarray:
    """Closed-form ramp: rising toward +A for psi in [0, pi), falling toward
    -A for psi in [pi, 2 pi)."""
    rising = psi < math.pi
    out = np.empty_like(psi)
    a = amplitude
    out[rising] = -a + 2 * a * (1.0 - np.exp(-psi[rising] / tau[rising]))
    out[~rising] = a - 2 * a * (1.0 - np.exp(-(psi[~rising] - math.pi) / tau[~rising]))
    return out


def _synthesize_analytic(config: WaveformConfig) -> np.ndarray:
    t = config.grid.times()
    T = config.rc.period
    taus = config.rc.taus()
    p = _period_index(t, T, config.rc.n_periods)
    tau_t = taus[p]
    channels = np.empty((4, t.size))
    for e, phi in enumerate(config.phase_offsets):
        psi = np.mod(2.0 * math.pi * t / T + phi, 2.0 * math.pi)
        channels[e] = config.v_bias + _ramp_value(psi, tau_t, config.amplitude)
    return channels


def _synthesize_continuous(config: WaveformConfig) -> np.ndarray:
    t = config.grid.times()
    n = t.size
    T = config.rc.period
    omega = 2.0 * math.pi / T
    taus = config.rc.taus()
    a = config.amplitude
    channels = np.empty((4, n))
    for e, phi in enumerate(config.phase_offsets):
        # Segment boundaries: half-period phase flips (psi crossing 0 or pi)
        # and period boundaries (tau updates). Both reset the exponential.
        flips = []
        m = math.ceil(phi / math.pi - 1e-12)
        while True:
            tb = (m * math.pi - phi) / omega
            if tb >= t[-1]:
                break
            if tb > 0:
                flips.append((tb, "flip"))
            m += 1
        bounds = [(p * T, "period") for p in range(1, config.rc.n_periods) if p * T < t[-1]]
        events = sorted(flips + bounds)
        edges = [0.0] + [ev[0] for ev in events] + [t[-1] + config.grid.dt]

        psi0 = phi % (2.0 * math.pi)
        tau0 = taus[0]
        v = _ramp_value(np.array([psi0]), np.array([tau0]), a)[0]  # steady entry
        for k in range(len(edges) - 1):
            ta, tb = edges[k], edges[k + 1]
            i0 = int(np.searchsorted(t, ta - 1e-9))
            i1 = int(np.searchsorted(t, tb - 1e-9))
            psi_a = (omega * ta + phi) % (2.0 * math.pi)
            # Entry exactly at a flip belongs to the new half period.
            if abs(psi_a - math.pi) < 1e-9:
                psi_a = math.pi
            elif psi_a > 2.0 * math.pi - 1e-9 or psi_a < 1e-9:
                psi_a = 0.0
            target = a if psi_a < math.pi else -a
            tau_seg = taus[_period_index(np.array([ta + 1e-9]), T, config.rc.n_periods)[0]]
            if i1 > i0:
                decay = np.exp(-omega * (t[i0:i1] - ta) / tau_seg)
                channels[e, i0:i1] = config.v_bias + target + (v - target) * decay
            v = target + (v - target) * math.exp(-omega * (tb - ta) / tau_seg)
    return channels


def synthesize(config: WaveformConfig) -> ElectrodeWaveforms:
    """Generate the four phase-shifted ramp waveforms on the config grid."""
    if config.mode == "analytic":
        channels = _synthesize_analytic(config)
    else:
        channels = _synthesize_continuous(config)
    return ElectrodeWaveforms(channels, config.grid, config.phase_offsets)


def inject_noise(waveforms: ElectrodeWaveforms, spec: NoiseSpec) -> ElectrodeWaveforms:
    """Add band-limited zero-mean Gaussian noise, independently per channel.

    White Gaussian samples are shaped in the frequency domain (out-of-band
    bins zeroed, DC always excluded) and rescaled so the expected per-sample
    standard deviation is scale * sigma_v. Deterministic for a given seed.
    """
    grid = waveforms.grid
    if spec.f_max > grid.nyquist_hz * (1 + 1e-12):
        raise DomainError(
            f"f_max = {spec.f_max} Hz exceeds the grid Nyquist frequency "
            f"{grid.nyquist_hz} Hz"
        )
    if spec.scale == 0.0 or spec.sigma_v == 0.0:
        return ElectrodeWaveforms(waveforms.channels.copy(), grid, waveforms.phase_offsets)

    n = grid.n_samples
    freqs = np.fft.rfftfreq(n, d=grid.dt * SECONDS_PER_NS)
    keep = (freqs >= spec.f_min) & (freqs <= spec.f_max) & (freqs > 0)
    if not keep.any():
        return ElectrodeWaveforms(waveforms.channels.copy(), grid, waveforms.phase_offsets)

    # Expected variance fraction retained by the mask, counting the doubled
    # weight of interior rfft bins.
    weight = np.full(freqs.size, 2.0)
    weight[0] = 1.0
    if n % 2 == 0:
        weight[-1] = 1.0
    frac = float(np.sum(weight[keep]) / n)

    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal((4, n))
    spectrum = np.fft.rfft(white, axis=1)
    spectrum[:, ~keep] = 0.0
    shaped = np.fft.irfft(spectrum, n=n, axis=1)
    shaped *= spec.scale * spec.sigma_v / math.sqrt(frac)
    return ElectrodeWaveforms(waveforms.channels + shaped, grid, waveforms.phase_offsets)
