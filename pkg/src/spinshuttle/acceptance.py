"""Acceptance criteria, runnable via the CLI selftest or pytest.

Each criterion returns a CriterionResult with a pass flag and a detail
string; the selftest prints one line per criterion and exits nonzero on
any failure. Tolerances are fixed here, not configurable.
"""

from __future__ import annotations

import math
import os
import shutil
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dynamics import LindbladSpec, build_hamiltonian, propagate, local_valley_eigensystem
from .estimators import BudgetInputs, power_estimate, surface_code_budget
from .metrics import ensemble_fidelity, partial_trace_valley, spin_purity
from .optimizer import EvalContext, GAConfig, exhaustive_search, run_ga
from .params import (
    GeometryParams,
    PhysicalParams,
    TimeGrid,
    clock_frequency,
    shuttle_duration,
    shuttling_frequency,
    signal_period,
)
from .pipeline import (
    RealizationRunner,
    ShuttleSetup,
    derive_seeds,
    run_ensemble,
    warm_propagation_kernel,
)
from .trajectory import Trajectory, extract_trajectory, potential_minimum_oracle
from .valleymap import ValleyMap, generate_valley_map
from .waveform import ElectrodeWaveforms, NoiseSpec, PHASE_OFFSETS


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: str
    elapsed_s: float


def _result(number, name, t0, checks):
    """checks: list of (label, ok, detail)."""
    failed = [f"{label}: {detail}" for label, ok, detail in checks if not ok]
    details = "; ".join(f"{label}={detail}" for label, _, detail in checks)
    return CriterionResult(
        number=number,
        name=name,
        passed=not failed,
        details=details if not failed else "FAILED " + "; ".join(failed),
        elapsed_s=time.perf_counter() - t0,
    )


def matrix_exponential_propagation(h, rho0, t, hbar):
    """Independent unitary-propagation oracle via eigendecomposition."""
    evals, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * evals * t / hbar)) @ vecs.conj().T
    return u @ rho0 @ u.conj().T


def criterion_1(threads=None) -> CriterionResult:
    """Arithmetic exactness of the closed-form estimators."""
    t0 = time.perf_counter()
    checks = []
    f = shuttling_frequency(20.0, 100.0)
    checks.append(("f(20 m/s)", abs(f - 50.0) < 1e-12, f"{f} MHz"))
    fc = clock_frequency(20.0, 100.0)
    checks.append(("f_clk", abs(fc - 200.0) < 1e-12, f"{fc} MHz"))
    table = {5.0: 2.00, 10.0: 1.00, 15.0: 0.67, 20.0: 0.50}
    for v, expected in table.items():
        t_us = round(shuttle_duration(10000.0, v), 2)
        checks.append((f"t_shuttle({v:g})", t_us == expected, f"{t_us} us"))
    report = surface_code_budget(BudgetInputs(0.5, 0.2, 0.08, 10.0))
    checks.append(("t_SC", round(report.t_sc, 2) == 24.44, f"{report.t_sc} us"))
    checks.append(("D_shuttle", round(report.duty_cycle, 4) == 0.4501, f"{report.duty_cycle:.6f}"))
    p = power_estimate(1e-12, 0.2, 50e6)
    checks.append(("P(1pF,0.2V,50MHz)", abs(p - 2.0) < 1e-12, f"{p} uW"))
    return _result(1, "arithmetic exactness", t0, checks)


def _random_invariant_run(seed):
    rng = np.random.default_rng(seed)
    v = float(rng.choice([5.0, 10.0, 20.0]))
    duration = 2000.0  # ns
    distance = v * duration
    vmap = generate_valley_map(
        mu_r=float(rng.uniform(2.5, 3.5)),
        mu_i=float(rng.uniform(-0.3, 0.3)),
        sigma=float(rng.uniform(0.25, 0.5)),
        corr_length=15.0,
        dx=2.0,
        extent=(-100.0, distance + 100.0),
        seed=int(rng.integers(2**31)),
    )
    grid = TimeGrid.for_duration(duration, 0.1)
    x = v * grid.times()
    traj = Trajectory(x, np.full(grid.n_samples, v), grid)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    rho0 = np.outer(psi, psi.conj())
    phys = PhysicalParams(
        b_z=float(rng.uniform(0.01, 0.04)), t_1v=float(rng.uniform(100.0, 1000.0))
    )
    # rtol sets the step heuristic only; the stated invariant tolerances are
    # asserted on the measured run below, with orders of margin on these maps
    prop = propagate(
        rho0, traj, vmap, phys, LindbladSpec(phys.t_1v), rtol=1e-6, budget="observable"
    )
    traces = np.einsum("nii->n", prop.states)
    herm = np.abs(prop.states - np.conj(np.swapaxes(prop.states, 1, 2))).max()
    purity = np.real(np.einsum("nab,nba->n", prop.states, prop.states)).max()
    return (
        float(np.abs(traces - 1.0).max()),
        float(herm),
        float(prop.min_eigenvalue),
        float(purity),
    )


def criterion_2(threads=None) -> CriterionResult:
    """Integrator physics oracles: relaxation, matrix exponential, invariants."""
    t0 = time.perf_counter()
    threads = threads or os.cpu_count() or 1
    checks = []
    phys = PhysicalParams()

    # (a) excited-valley decay over one lifetime, desk-scaled T_1v = 100 ns
    vmap = ValleyMap(-500.0, 10.0, np.full(201, 5.0), np.full(201, 1.0))
    grid = TimeGrid(0.1, 1001)
    static = Trajectory(np.zeros(1001), np.zeros(1001), grid)
    basis = local_valley_eigensystem(5.0, 1.0)
    spin_up = np.array([1.0, 0.0])
    rho0 = np.kron(np.outer(basis.excited, basis.excited.conj()), np.outer(spin_up, spin_up))
    prop = propagate(rho0, static, vmap, phys, LindbladSpec(100.0))
    e_full = np.kron(basis.excited, spin_up)
    p_e = float(np.real(e_full.conj() @ prop.final_state @ e_full))
    rel = abs(p_e - math.exp(-1.0)) / math.exp(-1.0)
    checks.append(("decay rel err", rel < 1e-6, f"{rel:.2e}"))

    # (b) unitary propagation vs exact matrix exponential after 100 steps
    phys_b = PhysicalParams(delta_g_over_g=0.1)
    vmap_b = ValleyMap(-500.0, 10.0, np.full(201, 1.0), np.full(201, 1.0))
    grid_b = TimeGrid(0.1, 101)
    static_b = Trajectory(np.zeros(101), np.zeros(101), grid_b)
    rng = np.random.default_rng(7)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    rho0_b = np.outer(psi, psi.conj())
    prop_b = propagate(
        rho0_b, static_b, vmap_b, phys_b, LindbladSpec(float("inf")), rtol=1e-10
    )
    h = build_hamiltonian(1.0, 1.0, phys_b).total
    exact = matrix_exponential_propagation(h, rho0_b, grid_b.t_final, phys_b.hbar)
    diff = float(np.abs(prop_b.final_state - exact).max())
    checks.append(("expm diff", diff < 1e-8, f"{diff:.2e}"))

    # (c) invariants on 100 randomized 2 us runs
    seeds = list(range(100))
    warm_propagation_kernel()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(_random_invariant_run, seeds))
    else:
        outs = [_random_invariant_run(s) for s in seeds]
    trace_worst = max(o[0] for o in outs)
    herm_worst = max(o[1] for o in outs)
    eig_worst = min(o[2] for o in outs)
    purity_worst = max(o[3] for o in outs)
    checks.append(("trace dev", trace_worst < 1e-9, f"{trace_worst:.2e}"))
    checks.append(("hermiticity", herm_worst < 1e-10, f"{herm_worst:.2e}"))
    checks.append(("min eigenvalue", eig_worst >= -1e-8, f"{eig_worst:.2e}"))
    checks.append(("max purity", purity_worst <= 1 + 1e-9, f"{purity_worst:.12f}"))
    return _result(2, "integrator physics oracles", t0, checks)


def criterion_3(threads=None) -> CriterionResult:
    """Trajectory exactness and potential-minimum oracle agreement."""
    t0 = time.perf_counter()
    checks = []
    geom = GeometryParams(l_pitch=100.0, distance=4000.0)  # 10 periods
    period = signal_period(20.0, 100.0)
    grid = TimeGrid.for_duration(10 * period, 0.1)
    t = grid.times()
    channels = np.array(
        [0.1 * np.cos(2 * np.pi * t / period + p) for p in PHASE_OFFSETS]
    )
    w = ElectrodeWaveforms(channels, grid)
    traj = extract_trajectory(w, geom)
    lin = geom.spatial_period * t / period
    dev = float(np.abs(traj.x - lin).max())
    checks.append(
        ("max |x - L t/T|", dev < 1e-6 * geom.spatial_period, f"{dev:.2e} nm")
    )

    grid1 = TimeGrid.for_duration(2 * period, 0.1)
    t1 = grid1.times()
    ch1 = np.array([0.1 * np.cos(2 * np.pi * t1 / period + p) for p in PHASE_OFFSETS])
    w1 = ElectrodeWaveforms(ch1, grid1)
    ref = potential_minimum_oracle(w1, geom)
    fast = extract_trajectory(w1, geom)
    oracle_dev = float(np.abs(ref.x - fast.x).max())
    checks.append(("oracle vs phasor", oracle_dev <= 5.0, f"{oracle_dev:.3f} nm"))

    geom5 = GeometryParams(l_pitch=100.0, distance=2000.0)
    grid5 = TimeGrid.for_duration(5 * period, 0.1)
    t5 = grid5.times()
    ch5 = np.array([0.1 * np.cos(2 * np.pi * t5 / period + p) for p in PHASE_OFFSETS])
    w5 = ElectrodeWaveforms(ch5, grid5)
    ref5 = potential_minimum_oracle(w5, geom5, time_stride=5)
    v_avg = (ref5.x[-1] - ref5.x[0]) / grid5.t_final
    target = geom5.spatial_period / period
    rel = abs(v_avg - target) / target
    checks.append(("oracle mean velocity", rel < 0.01, f"rel dev {rel:.2e}"))
    return _result(3, "trajectory exactness", t0, checks)


def criterion_4(threads=None) -> CriterionResult:
    """Noise-free constant-valley shuttle keeps coherence (N = 5)."""
    t0 = time.perf_counter()
    vmap = generate_valley_map(sigma=0.0, seed=0)
    setup = ShuttleSetup(v_avg=20.0, noise=NoiseSpec(scale=0.0), rtol=1e-9)
    ens, results, failures = run_ensemble(
        setup, vmap, setup.baseline_genome(), [None] * 5, threads=1
    )
    purities = ens.spin_purities()
    report = ensemble_fidelity(ens, setup.phys)
    purity_err = float((1.0 - purities).max())
    fid_err = float((1.0 - report.f_values).max())
    checks = [
        ("realizations", len(failures) == 0 and ens.n_noise == 5, f"{ens.n_noise} ok"),
        ("1 - P_s", purity_err < 1e-8, f"{purity_err:.2e}"),
        ("1 - F", fid_err < 1e-8, f"{fid_err:.2e}"),
    ]
    return _result(4, "constant-valley coherence", t0, checks)


def notch_map(n_periods=5, l_pitch=100.0) -> ValleyMap:
    """Crafted map: uniform splitting with one low-splitting notch whose
    local valley axis rotates, placed mid-channel."""
    distance = n_periods * 4 * l_pitch
    x = np.arange(-400.0, distance + 401.0, 1.0)
    notch = np.exp(-((x - 0.5 * distance) ** 2) / (2.0 * 8.0**2))
    delta_r = 25.0 * (1.0 - 0.99 * notch)
    delta_i = np.full_like(x, 2.0)
    return ValleyMap(-400.0, 1.0, delta_r, delta_i)


def criterion_5(threads=None) -> CriterionResult:
    """GA reaches the exhaustive optimum on the 5-period notch map."""
    t0 = time.perf_counter()
    threads = threads or os.cpu_count() or 1
    geom = GeometryParams(l_pitch=100.0, distance=2000.0)
    vmap = notch_map()
    setup = ShuttleSetup(geom=geom, v_avg=20.0, noise=NoiseSpec(scale=0.0))
    with RealizationRunner(setup, vmap, threads=threads, rtol=1e-5) as runner:
        ctx = EvalContext(setup=setup, vmap=vmap, noise_on=False, rtol=1e-5, runner=runner)
        _, best_j, _ = exhaustive_search(ctx, geom.n_periods)
        cfg = GAConfig(stop_threshold=None)
        hits = 0
        for master_seed in range(10):
            ga = run_ga(cfg, ctx, geom.n_periods, master_seed=master_seed)
            if abs(ga.best_fitness.j - best_j) <= 1e-6:
                hits += 1
    checks = [
        ("exhaustive optimum", True, f"J*={best_j:.8f}"),
        ("GA matches in >= 9/10 seeds", hits >= 9, f"{hits}/10"),
    ]
    return _result(5, "GA oracle equivalence", t0, checks)


def _benchmark_config(master_seed=2026) -> dict:
    """Optimize-benchmark configuration used for acceptance: disorder in the
    moderate-hazard regime the reference study operates in, and a GA budget
    sized for this machine."""
    data = cfgmod.default_config()
    data["valley_map"]["mu_r"] = 25.0
    data["valley_map"]["sigma"] = 7.0
    data["ga"]["generations"] = 12
    data["ga"]["n_noise"] = 4
    data["experiment"]["master_seed"] = master_seed
    data["experiment"]["n_noise"] = 50
    data["experiment"]["n_maps"] = 5
    return data


def criterion_6(threads=None, out_dir=None) -> CriterionResult:
    """Noise-aware optimization beats the baseline across disorder maps."""
    from .experiments import run_optimize_benchmark

    t0 = time.perf_counter()
    data = _benchmark_config()
    if threads:
        data["run"]["threads"] = threads
    tmp = out_dir or tempfile.mkdtemp(prefix="spinshuttle-accept6-")
    out = run_optimize_benchmark(data, tmp)
    agg = out["aggregate"]
    rows = out["summary"]
    improved = agg["maps_improved"]
    checks = [
        (
            "optimized < baseline mean error",
            improved >= 4,
            f"{improved}/{agg['maps_total']} maps",
        ),
        (
            "aggregate threshold fraction",
            agg["optimized_threshold_fraction"] > agg["baseline_threshold_fraction"],
            f"{agg['optimized_threshold_fraction']:.3f} vs {agg['baseline_threshold_fraction']:.3f}",
        ),
        (
            "all realizations ok",
            all(r["n_failed"] == 0 for r in rows),
            f"failures {[r['n_failed'] for r in rows]}",
        ),
    ]
    if out_dir is None:
        shutil.rmtree(tmp, ignore_errors=True)
    return _result(6, "optimization benefit", t0, checks)


def criterion_7(threads=None, out_dir=None) -> CriterionResult:
    """Fidelity dispersion falls with velocity; vanishes without noise."""
    from .experiments import run_dispersion

    t0 = time.perf_counter()
    data = cfgmod.default_config()
    data["experiment"]["master_seed"] = 2027
    data["experiment"]["velocities"] = [5.0, 20.0]
    data["experiment"]["n_noise"] = 50
    if threads:
        data["run"]["threads"] = threads
    tmp = out_dir or tempfile.mkdtemp(prefix="spinshuttle-accept7-")
    rows = run_dispersion(data, tmp)["summary"]
    by_v = {r["v_avg"]: r for r in rows}
    noise_free_worst = max(r["sigma_f_noise_free"] for r in rows)
    checks = [
        (
            "sigma_F(5) > sigma_F(20)",
            by_v[5.0]["sigma_f"] > by_v[20.0]["sigma_f"],
            f"{by_v[5.0]['sigma_f']:.3e} vs {by_v[20.0]['sigma_f']:.3e}",
        ),
        (
            "noise-free sigma_F < 1e-8",
            noise_free_worst < 1e-8,
            f"{noise_free_worst:.2e}",
        ),
        ("no failures", all(r["n_failed"] == 0 for r in rows), ""),
    ]
    if out_dir is None:
        shutil.rmtree(tmp, ignore_errors=True)
    return _result(7, "dispersion trend", t0, checks)


def criterion_8(threads=None, out_dir=None) -> CriterionResult:
    """Near-signal noise band disperses purity more than a quasi-DC band."""
    from .experiments import run_band_sweep

    t0 = time.perf_counter()
    data = cfgmod.default_config()
    data["experiment"]["master_seed"] = 2028
    data["experiment"]["n_noise"] = 50
    data["experiment"]["bands"] = [[0.0, 5e6], [2.5e7, 7.5e7]]
    data["experiment"]["band_velocities"] = [5.0, 20.0]
    if threads:
        data["run"]["threads"] = threads
    tmp = out_dir or tempfile.mkdtemp(prefix="spinshuttle-accept8-")
    rows = run_band_sweep(data, tmp)["summary"]
    cell = {(r["f_min_hz"], r["f_max_hz"], r["v_avg"]): r["sigma_purity"] for r in rows}
    dc, ns = (0.0, 5e6), (2.5e7, 7.5e7)
    checks = [
        (
            "near-signal > quasi-DC at v=5",
            cell[ns + (5.0,)] > cell[dc + (5.0,)],
            f"{cell[ns + (5.0,)]:.3e} vs {cell[dc + (5.0,)]:.3e}",
        ),
        (
            "near-signal > quasi-DC at v=20",
            cell[ns + (20.0,)] > cell[dc + (20.0,)],
            f"{cell[ns + (20.0,)]:.3e} vs {cell[dc + (20.0,)]:.3e}",
        ),
        (
            "sigma falls with velocity (near-signal band)",
            cell[ns + (5.0,)] > cell[ns + (20.0,)],
            f"{cell[ns + (5.0,)]:.3e} vs {cell[ns + (20.0,)]:.3e}",
        ),
        (
            "sigma falls with velocity (quasi-DC band)",
            cell[dc + (5.0,)] > cell[dc + (20.0,)],
            f"{cell[dc + (5.0,)]:.3e} vs {cell[dc + (20.0,)]:.3e}",
        ),
    ]
    if out_dir is None:
        shutil.rmtree(tmp, ignore_errors=True)
    return _result(8, "noise-band trend", t0, checks)


def criterion_9(threads=None) -> CriterionResult:
    """Any experiment re-run from its snapshot reproduces the CSVs."""
    from .experiments import run_dispersion

    t0 = time.perf_counter()
    data = cfgmod.default_config()
    data["experiment"]["master_seed"] = 2029
    data["experiment"]["velocities"] = [20.0]
    data["experiment"]["n_noise"] = 4
    data["experiment"]["noise_free_reference"] = False
    data["run"]["threads"] = 2
    checks = []
    with tempfile.TemporaryDirectory() as tmp:
        first = Path(tmp) / "first"
        second = Path(tmp) / "second"
        run_dispersion(data, first)
        snapshot = cfgmod.load_config(first / "config_snapshot.toml")
        snapshot["run"]["threads"] = 1  # reproducibility must not depend on workers
        run_dispersion(snapshot, second)
        for name in ("summary.csv", "realizations.csv"):
            a = (first / name).read_bytes()
            b = (second / name).read_bytes()
            checks.append((name, a == b, f"{len(a)} bytes"))
    return _result(9, "reproducibility", t0, checks)


QUICK_CRITERIA = (1, 2, 3, 4, 9)
ALL_CRITERIA = tuple(range(1, 10))

_CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_selftest(data=None, quick=False) -> int:
    threads = None
    if data is not None:
        threads = cfgmod.threads_from(data)
    threads = threads or os.cpu_count() or 1
    numbers = QUICK_CRITERIA if quick else ALL_CRITERIA
    failed = 0
    for n in numbers:
        res = _CRITERIA[n](threads)
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} criterion {n} ({res.name}) [{res.elapsed_s:.1f}s]: {res.details}")
        if not res.passed:
            failed += 1
    print(f"{len(numbers) - failed}/{len(numbers)} criteria passed")
    return 0 if failed == 0 else 1
