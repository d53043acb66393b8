"""Experiment drivers mirroring the reference studies.

Every experiment writes into its output directory: the resolved config
snapshot (TOML), a per-realization CSV, a summary CSV, and SVG plots.
Summary numbers are formatted with repr so a re-run from the snapshot and
master seed reproduces them bit-identically. Realization failures are
recorded in a failure column and the run continues.
"""

from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .metrics import (
    EnsembleResult,
    ensemble_fidelity,
    ensemble_spin_purity,
    partial_trace_valley,
)
from .optimizer import EvalContext, run_ga
from .pipeline import (
    RealizationRunner,
    ShuttleSetup,
    derive_seeds,
    run_ensemble,
    run_realization,
)
from .plotting import line_plot, paired_scatter
from .waveform import NoiseSpec, inject_noise, synthesize


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _prepare_out(data: dict, out_dir) -> Path:
    out = Path(out_dir if out_dir is not None else data["experiment"]["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    cfgmod.save_snapshot(data, out / "config_snapshot.toml")
    return out


def _ensemble_rows(tag, seeds, results, report, failures):
    fail_map = dict(failures)
    rows = []
    ok_index = 0
    for k, (seed, res) in enumerate(zip(seeds, results)):
        if res is None:
            rows.append(tag + [k, seed, "", "", "", f"failed: {fail_map[k]}"])
        else:
            rows.append(
                tag
                + [
                    k,
                    seed,
                    res.spin_purity,
                    res.excited_population,
                    report.f_values[ok_index],
                    "",
                ]
            )
            ok_index += 1
    return rows


REALIZATION_HEADER = [
    "k",
    "noise_seed",
    "spin_purity",
    "excited_population",
    "fidelity",
    "failure",
]


def _excited_population_trace(states, x, vmap):
    """p_v(t) along a stored run: overlap of the reduced valley state with
    the local excited eigenstate (nan where the splitting is degenerate)."""
    from .dynamics import EPS_DELTA
    from .metrics import partial_trace_spin

    dr, di = vmap.sample(x)
    mag = np.hypot(dr, di)
    u = np.where(mag > 0, (dr + 1j * di) / np.where(mag > 0, mag, 1.0), 0.0)
    rv = partial_trace_spin(states)
    with np.errstate(invalid="ignore"):
        p = 0.5 * (np.real(np.einsum("nii->n", rv)) + 2.0 * np.real(u * rv[:, 0, 1]))
    return np.where(mag >= EPS_DELTA, p, np.nan)


def run_single(data: dict, out_dir=None) -> dict:
    """One end-to-end realization with full trace dumps."""
    out = _prepare_out(data, out_dir)
    setup = cfgmod.build_setup(data)
    vmap = cfgmod.build_map(data)
    master = int(data["experiment"]["master_seed"])
    noise_on = setup.noise.scale > 0 and setup.noise.sigma_v > 0
    seed = derive_seeds(master, "single-run", 1)[0] if noise_on else None

    res = run_realization(
        setup, vmap, setup.baseline_genome(), noise_seed=seed, budget="state",
        keep_trace=True,
    )
    vmap.save(out / "valley_map.csv")
    waveforms = synthesize(setup.waveform_config(setup.baseline_genome()))
    if seed is not None:
        waveforms = inject_noise(waveforms, setup.noise.with_seed(seed))
    waveforms.to_csv(out / "waveforms.csv")
    res.trajectory.to_csv(out / "trajectory.csv")

    states = res.propagation.states
    times = res.propagation.times
    rs = partial_trace_valley(states)
    purity = np.real(np.einsum("nab,nba->n", rs, rs))
    bloch_x = np.real(rs[:, 0, 1] + rs[:, 1, 0])
    bloch_y = np.real(1j * (rs[:, 0, 1] - rs[:, 1, 0]))
    bloch_z = np.real(rs[:, 0, 0] - rs[:, 1, 1])
    p_v = _excited_population_trace(states, res.trajectory.x, vmap)
    stride = max(1, states.shape[0] // 2000)
    rows = [
        [times[i], purity[i], p_v[i], bloch_x[i], bloch_y[i], bloch_z[i]]
        for i in range(0, states.shape[0], stride)
    ]
    _write_csv(
        out / "state_trace.csv",
        ["t_ns", "spin_purity", "excited_population", "bloch_x", "bloch_y", "bloch_z"],
        rows,
    )

    summary = dict(
        v_avg=setup.v_avg,
        noise_seed="" if seed is None else seed,
        final_spin_purity=res.spin_purity,
        final_excited_population=res.excited_population,
        x_final_nm=res.x_final,
        t_final_ns=res.t_final,
        substeps=res.substeps,
        frozen_samples=res.frozen_samples,
    )
    _write_csv(out / "summary.csv", list(summary), [list(summary.values())])
    return summary


def run_dispersion(data: dict, out_dir=None) -> dict:
    """Noise-induced dispersion of fidelity and purity versus velocity."""
    out = _prepare_out(data, out_dir)
    exp = data["experiment"]
    master = int(exp["master_seed"])
    n_noise = int(exp["n_noise"])
    velocities = [float(v) for v in exp["velocities"]]
    threads = cfgmod.threads_from(data)
    seeds = derive_seeds(master, "dispersion-noise", n_noise)
    vmap = cfgmod.build_map(data)
    vmap.save(out / "valley_map.csv")

    real_rows, summary_rows = [], []
    for v in velocities:
        setup = cfgmod.build_setup(data, v_avg=v)
        ens, results, failures = run_ensemble(
            setup, vmap, setup.baseline_genome(), seeds, threads=threads or 2
        )
        report = ensemble_fidelity(ens, setup.phys)
        purities = ens.spin_purities()
        real_rows += _ensemble_rows([v], seeds, results, report, failures)
        row = dict(
            v_avg=v,
            n_ok=len(purities),
            n_failed=len(failures),
            f_mean=report.f_mean,
            sigma_f=report.f_std,
            purity_mean=float(purities.mean()),
            sigma_purity=float(purities.std()),
            ensemble_purity=ensemble_spin_purity(ens.final_states),
        )
        if exp["noise_free_reference"]:
            ens0, _, _ = run_ensemble(
                setup, vmap, setup.baseline_genome(), [None] * n_noise, threads=1
            )
            rep0 = ensemble_fidelity(ens0, setup.phys)
            row["sigma_f_noise_free"] = rep0.f_std
            row["sigma_purity_noise_free"] = float(ens0.spin_purities().std())
        summary_rows.append(row)

    _write_csv(out / "realizations.csv", ["v_avg"] + REALIZATION_HEADER, real_rows)
    header = list(summary_rows[0])
    _write_csv(out / "summary.csv", header, [[r[k] for k in header] for r in summary_rows])
    line_plot(
        out / "dispersion.svg",
        velocities,
        [
            ("sigma_F", [r["sigma_f"] for r in summary_rows]),
            ("sigma_Ps", [r["sigma_purity"] for r in summary_rows]),
        ],
        "v_avg (m/s)",
        "std over noise realizations",
        f"shot-to-shot dispersion, N={n_noise}",
        logy=True,
    )
    return dict(summary=summary_rows)


def run_band_sweep(data: dict, out_dir=None) -> dict:
    """Purity dispersion with noise confined to one frequency band at a time."""
    out = _prepare_out(data, out_dir)
    exp = data["experiment"]
    master = int(exp["master_seed"])
    n_noise = int(exp["n_noise"])
    bands = [(float(b[0]), float(b[1])) for b in exp["bands"]]
    velocities = [float(v) for v in exp["band_velocities"]]
    threads = cfgmod.threads_from(data)
    seeds = derive_seeds(master, "band-noise", n_noise)
    vmap = cfgmod.build_map(data)
    vmap.save(out / "valley_map.csv")

    real_rows, summary_rows = [], []
    for band in bands:
        for v in velocities:
            setup = cfgmod.build_setup(data, v_avg=v)
            noise = NoiseSpec(
                scale=setup.noise.scale,
                sigma_v=setup.noise.sigma_v,
                f_min=band[0],
                f_max=band[1],
            )
            setup = _with_noise(setup, noise)
            ens, results, failures = run_ensemble(
                setup, vmap, setup.baseline_genome(), seeds, threads=threads or 2
            )
            report = ensemble_fidelity(ens, setup.phys)
            purities = ens.spin_purities()
            real_rows += _ensemble_rows(
                [band[0], band[1], v], seeds, results, report, failures
            )
            summary_rows.append(
                dict(
                    f_min_hz=band[0],
                    f_max_hz=band[1],
                    v_avg=v,
                    n_ok=len(purities),
                    n_failed=len(failures),
                    sigma_purity=float(purities.std()),
                    sigma_f=report.f_std,
                    purity_mean=float(purities.mean()),
                )
            )

    if summary_rows:
        _write_csv(
            out / "realizations.csv",
            ["f_min_hz", "f_max_hz", "v_avg"] + REALIZATION_HEADER,
            real_rows,
        )
        header = list(summary_rows[0])
        _write_csv(out / "summary.csv", header, [[r[k] for k in header] for r in summary_rows])
        centers = [0.5 * (b[0] + b[1]) for b in bands]
        series = []
        for v in velocities:
            series.append(
                (
                    f"v={v:g} m/s",
                    [
                        r["sigma_purity"]
                        for r in summary_rows
                        if r["v_avg"] == v
                    ],
                )
            )
        line_plot(
            out / "band_sweep.svg",
            centers,
            series,
            "band center (Hz)",
            "sigma of final spin purity",
            f"noise-band sweep, N={n_noise}",
            logy=True,
            xlog=centers[0] > 0,
        )
    else:
        _write_csv(out / "summary.csv", ["f_min_hz", "f_max_hz", "v_avg"], [])
        _write_csv(
            out / "realizations.csv",
            ["f_min_hz", "f_max_hz", "v_avg"] + REALIZATION_HEADER,
            [],
        )
    return dict(summary=summary_rows)


def _with_noise(setup: ShuttleSetup, noise: NoiseSpec) -> ShuttleSetup:
    return replace(setup, noise=noise)


def run_optimize_benchmark(data: dict, out_dir=None) -> dict:
    """Noise-aware GA optimization vs constant-resistor baseline per map."""
    out = _prepare_out(data, out_dir)
    exp = data["experiment"]
    master = int(exp["master_seed"])
    n_noise = int(exp["n_noise"])
    threshold = float(exp["error_threshold"])
    threads = cfgmod.threads_from(data)
    ga_cfg = cfgmod.build_ga(data)
    ga_rtol = float(data["ga"]["rtol"])
    setup = cfgmod.build_setup(data)

    if data["valley_map"]["path"]:
        map_seeds = [None]
    else:
        map_seeds = setup.default_map_seeds(int(exp["n_maps"]), master)
    heldout_seeds = derive_seeds(master, "held-out-noise", n_noise)

    real_rows, summary_rows = [], []
    base_groups, opt_groups, labels = [], [], []
    improved, total_maps = 0, 0
    base_hits, base_n, opt_hits, opt_n = 0, 0, 0, 0

    for mi, mseed in enumerate(map_seeds):
        vmap = cfgmod.build_map(data, seed=mseed)
        vmap.save(out / f"map{mi}_valley_map.csv")
        with RealizationRunner(setup, vmap, threads=threads, rtol=ga_rtol) as runner:
            ctx = EvalContext(
                setup=setup,
                vmap=vmap,
                noise_on=setup.noise.scale > 0 and setup.noise.sigma_v > 0,
                lambda_sigma=ga_cfg.lambda_sigma,
                rtol=ga_rtol,
                runner=runner,
            )
            ga = run_ga(ga_cfg, ctx, setup.n_periods, master_seed=master + mi)
        _write_csv(
            out / f"map{mi}_history.csv",
            ["generation", "best_j", "mean_j", "best_purity_mean", "wall_time_s"],
            [
                [h["generation"], h["best_j"], h["mean_j"], h["best_purity_mean"], h["wall_time_s"]]
                for h in ga.history
            ],
        )
        (out / f"map{mi}_best_genome.txt").write_text(
            "\n".join(str(g) for g in ga.best_genome) + "\n"
        )

        rows_by_protocol = {}
        with RealizationRunner(setup, vmap, threads=threads) as runner:
            for name, genome in (
                ("baseline", setup.baseline_genome()),
                ("optimized", ga.best_genome),
            ):
                ens, results, failures = run_ensemble(
                    setup, vmap, genome, heldout_seeds, runner=runner
                )
                report = ensemble_fidelity(ens, setup.phys)
                split = _split_center_fidelity(ens, setup)
                purities = ens.spin_purities()
                errors = 1.0 - report.f_values
                rows_by_protocol[name] = dict(
                    report=report,
                    split_f_mean=split,
                    purities=purities,
                    errors=errors,
                    failures=failures,
                    results=results,
                )
                real_rows += _ensemble_rows(
                    [mi, name], heldout_seeds, results, report, failures
                )

        base = rows_by_protocol["baseline"]
        opt = rows_by_protocol["optimized"]
        summary_rows.append(
            dict(
                map_index=mi,
                map_seed="" if mseed is None else mseed,
                generations_run=ga.generations_run,
                ga_evaluations=ga.evaluations,
                ga_best_j=ga.best_fitness.j,
                baseline_mean_error=float(base["errors"].mean()),
                optimized_mean_error=float(opt["errors"].mean()),
                baseline_sigma_f=base["report"].f_std,
                optimized_sigma_f=opt["report"].f_std,
                baseline_threshold_fraction=float((base["errors"] <= threshold).mean()),
                optimized_threshold_fraction=float((opt["errors"] <= threshold).mean()),
                baseline_f_mean_heldout_center=base["split_f_mean"],
                optimized_f_mean_heldout_center=opt["split_f_mean"],
                baseline_mean_purity=float(base["purities"].mean()),
                optimized_mean_purity=float(opt["purities"].mean()),
                n_failed=len(base["failures"]) + len(opt["failures"]),
            )
        )
        total_maps += 1
        if float(opt["errors"].mean()) < float(base["errors"].mean()):
            improved += 1
        base_hits += int((base["errors"] <= threshold).sum())
        base_n += base["errors"].size
        opt_hits += int((opt["errors"] <= threshold).sum())
        opt_n += opt["errors"].size
        base_groups.append(np.maximum(base["errors"], 1e-16))
        opt_groups.append(np.maximum(opt["errors"], 1e-16))
        labels.append(f"map {mi}")

    aggregate = dict(
        maps_improved=improved,
        maps_total=total_maps,
        baseline_threshold_fraction=base_hits / max(1, base_n),
        optimized_threshold_fraction=opt_hits / max(1, opt_n),
    )
    header = list(summary_rows[0])
    _write_csv(out / "summary.csv", header, [[r[k] for k in header] for r in summary_rows])
    _write_csv(out / "aggregate.csv", list(aggregate), [list(aggregate.values())])
    _write_csv(
        out / "realizations.csv",
        ["map_index", "protocol"] + REALIZATION_HEADER,
        real_rows,
    )
    paired_scatter(
        out / "benchmark.svg",
        labels,
        base_groups,
        opt_groups,
        "shuttling error 1 - F",
        f"baseline vs optimized, N={n_noise} held-out realizations",
        threshold=threshold,
    )
    return dict(summary=summary_rows, aggregate=aggregate)


def _split_center_fidelity(ens: EnsembleResult, setup: ShuttleSetup):
    """Held-out-center variant: the center state comes from the first half
    of the ensemble, fidelities are scored on the second half."""
    n = ens.n_noise
    if n < 4:
        return float("nan")
    half = n // 2
    center = EnsembleResult(ens.final_states[:half], ens.t_f)
    scored = EnsembleResult(ens.final_states[half:], ens.t_f)
    return ensemble_fidelity(scored, setup.phys, center_result=center).f_mean
