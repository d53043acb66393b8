"""End-to-end realization pipeline shared by the optimizer and the harness.

One realization: build the RC schedule from a genome, synthesize the four
gate waveforms, optionally inject one seeded noise realization, extract the
trajectory, propagate the spin-valley state across the valley map, and
reduce to final metrics. Realizations are pure functions of
(setup, map, genome, seed), so ensembles fan out to a process pool and
reassemble by index.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import LindbladSpec, PropagationResult, initial_shuttle_state, propagate
from .errors import ConfigError, ShuttleError
from .metrics import EnsembleResult, excited_valley_population, spin_purity
from .params import GeometryParams, PhysicalParams, TimeGrid, signal_period
from .trajectory import Trajectory, extract_trajectory
from .valleymap import ValleyMap
from .waveform import (
    DEFAULT_TAU_SET,
    NoiseSpec,
    RCSchedule,
    WaveformConfig,
    inject_noise,
    resistors_for_taus,
    synthesize,
)

#: Velocity defining the resistor-ladder reference point: the default tau set
#: is realized exactly at this operating point and scales as 1/T elsewhere.
REFERENCE_V_AVG = 20.0


def default_resistors(l_pitch: float = 100.0, capacitance: float = 1e-12) -> tuple:
    period_ref = signal_period(REFERENCE_V_AVG, l_pitch)
    return resistors_for_taus(DEFAULT_TAU_SET, capacitance, period_ref)


@dataclass(frozen=True)
class ShuttleSetup:
    """Immutable description of one operating point of the signal chain."""

    phys: PhysicalParams = field(default_factory=PhysicalParams)
    geom: GeometryParams = field(default_factory=GeometryParams)
    v_avg: float = 20.0
    dt: float = 0.1
    amplitude: float = 0.1
    v_bias: float = 0.0
    capacitance: float = 1e-12
    resistor_values: tuple | None = None
    mode: str = "continuous"
    baseline_index: int = 1
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    rtol: float = 1e-5

    def __post_init__(self):
        if self.v_avg <= 0:
            raise ConfigError("v_avg must be positive")
        if self.resistor_values is None:
            object.__setattr__(
                self,
                "resistor_values",
                default_resistors(self.geom.l_pitch, self.capacitance),
            )
        if len(self.resistor_values) != 4:
            raise ConfigError("need exactly four resistor-ladder values")

    @property
    def period(self) -> float:
        return signal_period(self.v_avg, self.geom.l_pitch)

    @property
    def n_periods(self) -> int:
        return self.geom.n_periods

    @property
    def duration(self) -> float:
        return self.geom.distance / self.v_avg

    def grid(self) -> TimeGrid:
        return TimeGrid.for_duration(self.duration, self.dt)

    def baseline_genome(self) -> tuple:
        return (self.baseline_index,) * self.n_periods

    def waveform_config(self, genome) -> WaveformConfig:
        if len(genome) != self.n_periods:
            raise ConfigError(
                f"genome length {len(genome)} != {self.n_periods} shuttle periods"
            )
        rc = RCSchedule(
            self.resistor_values,
            self.capacitance,
            self.period,
            tuple(int(g) for g in genome),
        )
        return WaveformConfig(self.amplitude, self.v_bias, rc, self.grid(), self.mode)

    def map_extent(self, pad: float | None = None) -> tuple:
        if pad is None:
            pad = self.geom.spatial_period
        return (-pad, self.geom.distance + pad)

    def default_map_seeds(self, n_maps: int, master_seed: int) -> list:
        return derive_seeds(master_seed, "valley-map", n_maps)


@dataclass
class RealizationResult:
    final_state: np.ndarray
    spin_purity: float
    excited_population: float
    x_final: float
    t_final: float
    substeps: int
    frozen_samples: int
    noise_seed: int | None
    trajectory: Trajectory | None = None
    propagation: PropagationResult | None = None


def derive_seeds(master_seed: int, tag: str, n: int) -> list:
    """Deterministic child seeds for a named stream of a master seed."""
    tag_int = int.from_bytes(tag.encode(), "little") % (2**63)
    ss = np.random.SeedSequence([int(master_seed) % (2**63), tag_int])
    return [int(s) for s in ss.generate_state(n, dtype=np.uint64)]


def run_realization(
    setup: ShuttleSetup,
    vmap: ValleyMap,
    genome,
    noise_seed: int | None = None,
    rtol: float | None = None,
    budget: str = "observable",
    keep_trace: bool = False,
) -> RealizationResult:
    """One waveform -> trajectory -> propagation -> metrics evaluation.

    The default error budget is observable-grade: the quantities this
    pipeline reports (purity, valley population, clustering fidelity) are
    insensitive to the common-mode phase error that dominates state-grade
    step control. Pass budget="state" for full state accuracy.
    """
    waveforms = synthesize(setup.waveform_config(genome))
    if noise_seed is not None and setup.noise.scale > 0 and setup.noise.sigma_v > 0:
        waveforms = inject_noise(waveforms, setup.noise.with_seed(noise_seed))
    traj = extract_trajectory(waveforms, setup.geom)
    rho0 = initial_shuttle_state(vmap, float(traj.x[0]))
    prop = propagate(
        rho0,
        traj,
        vmap,
        setup.phys,
        LindbladSpec(setup.phys.t_1v),
        rtol=setup.rtol if rtol is None else rtol,
        budget=budget,
    )
    final = prop.final_state
    x_f = float(traj.x[-1])
    dr, di = vmap.sample(x_f)
    return RealizationResult(
        final_state=final,
        spin_purity=spin_purity(final),
        excited_population=excited_valley_population(final, float(dr), float(di)),
        x_final=x_f,
        t_final=float(traj.grid.t_final),
        substeps=prop.substeps,
        frozen_samples=prop.frozen_samples,
        noise_seed=noise_seed,
        trajectory=traj if keep_trace else None,
        propagation=prop if keep_trace else None,
    )


# Worker-process context, installed once per pool by the initializer so the
# setup and map are pickled once instead of per task.
_WORKER_CTX = {}


def _init_worker(setup, vmap, rtol, budget):
    _WORKER_CTX["setup"] = setup
    _WORKER_CTX["vmap"] = vmap
    _WORKER_CTX["rtol"] = rtol
    _WORKER_CTX["budget"] = budget


def _run_task(task):
    genome, seed = task
    try:
        res = run_realization(
            _WORKER_CTX["setup"],
            _WORKER_CTX["vmap"],
            genome,
            noise_seed=seed,
            rtol=_WORKER_CTX["rtol"],
            budget=_WORKER_CTX["budget"],
        )
        res.trajectory = None
        res.propagation = None
        return res
    except ShuttleError as exc:
        return f"{type(exc).__name__}: {exc}"


class RealizationRunner:
    """Maps (genome, seed) tasks over a worker pool, order-preserving.

    With threads <= 1 everything runs in-process. Results are returned in
    task order so ensemble statistics are independent of scheduling.
    """

    def __init__(self, setup: ShuttleSetup, vmap: ValleyMap, threads: int | None = None,
                 rtol: float | None = None, budget: str = "observable"):
        self.setup = setup
        self.vmap = vmap
        self.rtol = rtol
        self.budget = budget
        self.threads = os.cpu_count() if threads is None else max(1, int(threads))
        self._pool = None

    def __enter__(self):
        if self.threads > 1:
            warm_propagation_kernel()
            self._pool = ProcessPoolExecutor(
                max_workers=self.threads,
                initializer=_init_worker,
                initargs=(self.setup, self.vmap, self.rtol, self.budget),
            )
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def run(self, tasks):
        """tasks: iterable of (genome, noise_seed). Returns a list whose
        entries are RealizationResult or an error string (record-and-continue)."""
        tasks = list(tasks)
        if self._pool is None:
            _init_worker(self.setup, self.vmap, self.rtol, self.budget)
            return [_run_task(t) for t in tasks]
        chunk = max(1, len(tasks) // (4 * self.threads))
        return list(self._pool.map(_run_task, tasks, chunksize=chunk))


def run_ensemble(
    setup: ShuttleSetup,
    vmap: ValleyMap,
    genome,
    seeds,
    threads: int = 1,
    rtol: float | None = None,
    budget: str = "observable",
    runner: RealizationRunner | None = None,
):
    """Evaluate one genome over a list of noise seeds (None = noise off).

    Identical tasks (e.g. every seed with noise disabled) are computed once.
    Returns (EnsembleResult, results_by_index, failures) where failures is a
    list of (index, message); failed realizations are recorded and skipped,
    never silently dropped.
    """
    genome = tuple(int(g) for g in genome)
    noise_active = setup.noise.scale > 0 and setup.noise.sigma_v > 0
    keys = [(genome, s if noise_active else None) for s in seeds]
    unique = list(dict.fromkeys(keys))

    if runner is not None:
        outputs = runner.run(unique)
    else:
        with RealizationRunner(setup, vmap, threads=threads, rtol=rtol, budget=budget) as local:
            outputs = local.run(unique)
    by_key = dict(zip(unique, outputs))

    results, failures, finals = [], [], []
    for idx, key in enumerate(keys):
        out = by_key[key]
        if isinstance(out, str):
            results.append(None)
            failures.append((idx, out))
        else:
            results.append(out)
            finals.append(out.final_state)
    if not finals:
        raise ShuttleError(
            f"all {len(keys)} realizations failed; first error: {failures[0][1]}"
        )
    t_f = next(r for r in results if r is not None).t_final
    ensemble = EnsembleResult(np.stack(finals), t_f)
    return ensemble, results, failures


def warm_propagation_kernel():
    """Trigger JIT compilation once (before forking worker pools)."""
    grid = TimeGrid(0.1, 3)
    vmap = ValleyMap(-10.0, 10.0, np.full(4, 5.0), np.full(4, 1.0))
    traj = Trajectory(np.zeros(3), np.zeros(3), grid)
    rho0 = initial_shuttle_state(vmap, 0.0)
    propagate(rho0, traj, vmap, PhysicalParams(), LindbladSpec(100.0), substeps=2)
