"""Command-line front end.

Subcommands mirror the studies the toolkit supports: single-run,
dispersion, band-sweep, optimize, plus the closed-form budget/power
estimators and the selftest acceptance suite. Global flags: --config,
--seed, --out, --threads, --noise-scale, and generic --set overrides.
"""

from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from .errors import ShuttleError
from .estimators import BudgetInputs, power_estimate, surface_code_budget


def _add_common(parser):
    parser.add_argument("--config", help="TOML config file", default=None)
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker processes")
    parser.add_argument(
        "--noise-scale", type=float, default=None, help="noise amplitude multiplier"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="override any config field (TOML value syntax); repeatable",
    )


def _resolve(args) -> dict:
    data = cfgmod.load_config(args.config)
    cfgmod.apply_overrides(data, args.overrides)
    if args.seed is not None:
        data["experiment"]["master_seed"] = int(args.seed)
    if args.out is not None:
        data["experiment"]["out_dir"] = args.out
    if args.threads is not None:
        data["run"]["threads"] = int(args.threads)
    if args.noise_scale is not None:
        data["noise"]["scale"] = float(args.noise_scale)
    return data


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinshuttle",
        description="Conveyor-mode spin-shuttling co-simulation and control optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("single-run", "one end-to-end realization with trace dumps"),
        ("dispersion", "fidelity/purity dispersion versus shuttling velocity"),
        ("band-sweep", "purity dispersion versus injected noise band"),
        ("optimize", "noise-aware GA benchmark against the constant baseline"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p_budget = sub.add_parser("budget", help="surface-code shuttling duty cycle")
    p_budget.add_argument("--t-shuttle", type=float, required=True, help="us")
    p_budget.add_argument("--t-1q", type=float, default=0.2, help="us")
    p_budget.add_argument("--t-2q", type=float, default=0.08, help="us")
    p_budget.add_argument("--t-readout", type=float, default=10.0, help="us")

    p_power = sub.add_parser("power", help="analog power scaling estimate")
    p_power.add_argument("--c-eq", type=float, default=1e-12, help="farad")
    p_power.add_argument("--v-pp", type=float, default=0.2, help="volt")
    p_power.add_argument("--freq", type=float, required=True, help="Hz")

    p_self = sub.add_parser("selftest", help="run the acceptance suite")
    _add_common(p_self)
    p_self.add_argument(
        "--quick",
        action="store_true",
        help="fast criteria only (skips the long ensemble studies)",
    )

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ShuttleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "budget":
        report = surface_code_budget(
            BudgetInputs(args.t_shuttle, args.t_1q, args.t_2q, args.t_readout)
        )
        print(f"t_SC = {report.t_sc:.4f} us")
        print(f"D_shuttle = {report.duty_cycle:.4f}")
        return 0
    if args.command == "power":
        p = power_estimate(args.c_eq, args.v_pp, args.freq)
        print(f"P = {p:.4f} uW")
        return 0
    if args.command == "selftest":
        from .acceptance import run_selftest

        data = _resolve(args)
        return run_selftest(data, quick=args.quick)

    from . import experiments

    data = _resolve(args)
    runners = {
        "single-run": experiments.run_single,
        "dispersion": experiments.run_dispersion,
        "band-sweep": experiments.run_band_sweep,
        "optimize": experiments.run_optimize_benchmark,
    }
    data["experiment"]["kind"] = args.command
    out = runners[args.command](data)
    _print_outcome(args.command, out)
    return 0


def _print_outcome(command, out) -> None:
    if command == "single-run":
        print(
            f"final spin purity {out['final_spin_purity']:.8f}, "
            f"excited-valley population {out['final_excited_population']:.6f}"
        )
        return
    summary = out.get("summary", [])
    print(f"{command}: {len(summary)} summary rows written")
    if command == "optimize" and "aggregate" in out:
        agg = out["aggregate"]
        print(
            f"improved on {agg['maps_improved']}/{agg['maps_total']} maps; "
            f"threshold fraction {agg['baseline_threshold_fraction']:.3f} -> "
            f"{agg['optimized_threshold_fraction']:.3f}"
        )


if __name__ == "__main__":
    raise SystemExit(main())
