"""TOML-backed experiment configuration.

A single human-readable file describes one experiment; every field can be
overridden from the command line (``--set section.key=value`` plus the
dedicated global flags). The fully resolved configuration is persisted next
to the results so any run can be reproduced from its snapshot and master
seed alone.
"""

from __future__ import annotations

import copy
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version shim
    import tomli as tomllib

from .errors import ConfigError
from .optimizer import GAConfig
from .params import GeometryParams, PhysicalParams
from .pipeline import ShuttleSetup
from .valleymap import ValleyMap, generate_valley_map
from .waveform import NoiseSpec

DEFAULTS = {
    "physical": {
        "g_bar": 2.0,
        "delta_g_over_g": 1e-3,
        "b_z": 0.05,
        "t_1v": 1e6,
    },
    "geometry": {
        "l_pitch": 100.0,
        "distance": 10000.0,
    },
    "grid": {
        "dt": 0.1,
    },
    "waveform": {
        "amplitude": 0.1,
        "v_bias": 0.0,
        "capacitance": 1e-12,
        "mode": "continuous",
        "baseline_index": 1,
        "resistor_values": [],
    },
    "noise": {
        "scale": 0.1,
        "sigma_v": 2.5e-4,
        "f_min": 0.0,
        "f_max": 5e9,
    },
    "valley_map": {
        "path": "",
        "mu_r": 20.0,
        "mu_i": 0.0,
        "sigma": 15.0,
        "corr_length": 15.0,
        "dx": 1.0,
        "pad": 400.0,
        "seed": 0,
    },
    "run": {
        "v_avg": 20.0,
        "rtol": 1e-5,
        "threads": 0,
    },
    "ga": {
        "generations": 50,
        "population": 12,
        "parents": 2,
        "mutation_prob": 0.3,
        "elitism": 1,
        "tournament_size": 3,
        "lambda_sigma": 1.0,
        "n_noise": 8,
        "stop_threshold": 0.9999,
        "seed_mode": "per-generation",
        "warm_start": True,
        "rtol": 1e-5,
    },
    "experiment": {
        "kind": "single-run",
        "out_dir": "runs/out",
        "master_seed": 1,
        "n_noise": 50,
        "velocities": [5.0, 10.0, 15.0, 20.0],
        "n_maps": 5,
        "bands": [[0.0, 5e6], [2.5e7, 7.5e7]],
        "band_velocities": [5.0, 20.0],
        "noise_free_reference": True,
        "error_threshold": 1e-4,
    },
}

_SECTION_ORDER = [
    "physical",
    "geometry",
    "grid",
    "waveform",
    "noise",
    "valley_map",
    "run",
    "ga",
    "experiment",
]


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{here!r} must be a table")
            _merge(base[key], value, here)
        else:
            base[key] = value
    return base


def load_config(path=None) -> dict:
    """Defaults merged with the optional TOML file at path."""
    data = default_config()
    if path:
        with open(path, "rb") as fh:
            _merge(data, tomllib.load(fh))
    return data


def parse_override(text: str):
    """Parse a --set override 'section.key=value' using TOML value syntax."""
    key, sep, value = text.partition("=")
    if not sep or "." not in key:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    section, _, name = key.strip().partition(".")
    doc = tomllib.loads(f"v = {value.strip()}")
    return section, name, doc["v"]


def apply_overrides(data: dict, overrides) -> dict:
    for text in overrides or ():
        section, name, value = parse_override(text)
        _merge(data, {section: {name: value}})
    return data


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if value is None:
        raise ConfigError("cannot serialize None to TOML; use a sentinel value")
    raise ConfigError(f"cannot serialize {type(value).__name__} to TOML")


def to_toml(data: dict) -> str:
    lines = []
    for section in _SECTION_ORDER:
        if section not in data:
            continue
        lines.append(f"[{section}]")
        for key, value in data[section].items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def save_snapshot(data: dict, path) -> None:
    Path(path).write_text(to_toml(data))


def build_physical(data: dict) -> PhysicalParams:
    p = data["physical"]
    return PhysicalParams(
        g_bar=p["g_bar"],
        delta_g_over_g=p["delta_g_over_g"],
        b_z=p["b_z"],
        t_1v=p["t_1v"],
    )


def build_geometry(data: dict) -> GeometryParams:
    g = data["geometry"]
    return GeometryParams(l_pitch=g["l_pitch"], distance=g["distance"])


def build_noise(data: dict) -> NoiseSpec:
    n = data["noise"]
    return NoiseSpec(
        scale=n["scale"], sigma_v=n["sigma_v"], f_min=n["f_min"], f_max=n["f_max"]
    )


def build_setup(data: dict, v_avg: float | None = None) -> ShuttleSetup:
    w = data["waveform"]
    resistors = tuple(w["resistor_values"]) if w["resistor_values"] else None
    return ShuttleSetup(
        phys=build_physical(data),
        geom=build_geometry(data),
        v_avg=data["run"]["v_avg"] if v_avg is None else float(v_avg),
        dt=data["grid"]["dt"],
        amplitude=w["amplitude"],
        v_bias=w["v_bias"],
        capacitance=w["capacitance"],
        resistor_values=resistors,
        mode=w["mode"],
        baseline_index=w["baseline_index"],
        noise=build_noise(data),
        rtol=data["run"]["rtol"],
    )


def build_ga(data: dict) -> GAConfig:
    g = data["ga"]
    threshold = g["stop_threshold"]
    if isinstance(threshold, (int, float)) and threshold <= 0:
        threshold = None
    return GAConfig(
        generations=g["generations"],
        population=g["population"],
        parents=g["parents"],
        mutation_prob=g["mutation_prob"],
        elitism=g["elitism"],
        tournament_size=g["tournament_size"],
        lambda_sigma=g["lambda_sigma"],
        n_noise=g["n_noise"],
        stop_threshold=threshold,
        seed_mode=g["seed_mode"],
        warm_start=g["warm_start"],
    )


def build_map(data: dict, seed: int | None = None) -> ValleyMap:
    m = data["valley_map"]
    if m["path"]:
        vmap = ValleyMap.load(m["path"])
    else:
        geom = build_geometry(data)
        pad = m["pad"]
        vmap = generate_valley_map(
            mu_r=m["mu_r"],
            mu_i=m["mu_i"],
            sigma=m["sigma"],
            corr_length=m["corr_length"],
            dx=m["dx"],
            extent=(-pad, geom.distance + pad),
            seed=m["seed"] if seed is None else int(seed),
        )
    return vmap


def threads_from(data: dict) -> int | None:
    t = int(data["run"]["threads"])
    return None if t <= 0 else t
