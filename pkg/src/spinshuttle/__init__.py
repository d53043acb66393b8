"""Co-simulation and optimal-control toolkit for conveyor-mode electron-spin
shuttling: hardware-constrained four-phase waveforms, phasor trajectory
extraction, spin-valley Lindblad dynamics over disordered valley maps, and
genetic-algorithm optimization of per-period resistor schedules."""

from .dynamics import (
    LindbladSpec,
    build_hamiltonian,
    local_valley_eigensystem,
    propagate,
)
from .errors import ShuttleError
from .estimators import BudgetInputs, power_estimate, surface_code_budget
from .metrics import (
    EnsembleResult,
    FidelityReport,
    ensemble_fidelity,
    ensemble_spin_purity,
    excited_valley_population,
    spin_purity,
    unrotate,
)
from .optimizer import EvalContext, GAConfig, evaluate, exhaustive_search, run_ga
from .params import (
    GeometryParams,
    PhysicalParams,
    TimeGrid,
    clock_frequency,
    shuttle_duration,
    shuttling_frequency,
    signal_period,
)
from .pipeline import ShuttleSetup, run_ensemble, run_realization
from .trajectory import (
    Trajectory,
    extract_trajectory,
    phasor,
    potential_minimum_oracle,
    trajectory_from_phase,
    unwrap_phase,
)
from .valleymap import ValleyMap, generate_valley_map
from .waveform import (
    ElectrodeWaveforms,
    NoiseSpec,
    RCSchedule,
    WaveformConfig,
    inject_noise,
    synthesize,
    tau_for_period,
)

__version__ = "0.1.0"
