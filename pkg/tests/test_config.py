import pytest

from spinshuttle import config as cfgmod
from spinshuttle.errors import ConfigError


def test_defaults_build():
    data = cfgmod.default_config()
    setup = cfgmod.build_setup(data)
    assert setup.v_avg == 20.0
    assert setup.n_periods == 25
    assert len(setup.resistor_values) == 4
    ga = cfgmod.build_ga(data)
    assert ga.generations == 50 and ga.population == 12 and ga.parents == 2
    assert ga.mutation_prob == 0.3 and ga.elitism == 1


def test_toml_round_trip(tmp_path):
    data = cfgmod.default_config()
    data["run"]["v_avg"] = 12.5
    data["experiment"]["velocities"] = [5.0, 20.0]
    path = tmp_path / "cfg.toml"
    cfgmod.save_snapshot(data, path)
    loaded = cfgmod.load_config(path)
    assert loaded == data


def test_partial_file_merges_with_defaults(tmp_path):
    path = tmp_path / "partial.toml"
    path.write_text("[run]\nv_avg = 5.0\n")
    data = cfgmod.load_config(path)
    assert data["run"]["v_avg"] == 5.0
    assert data["geometry"]["l_pitch"] == 100.0


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[run]\nvelocity = 5.0\n")
    with pytest.raises(ConfigError):
        cfgmod.load_config(path)


def test_overrides():
    data = cfgmod.default_config()
    cfgmod.apply_overrides(
        data,
        ["noise.scale=0.5", 'waveform.mode="analytic"', "experiment.velocities=[5.0]"],
    )
    assert data["noise"]["scale"] == 0.5
    assert data["waveform"]["mode"] == "analytic"
    assert data["experiment"]["velocities"] == [5.0]
    with pytest.raises(ConfigError):
        cfgmod.apply_overrides(data, ["noise=1"])
    with pytest.raises(ConfigError):
        cfgmod.apply_overrides(data, ["noise.bogus=1"])


def test_build_map_from_config(tmp_path):
    data = cfgmod.default_config()
    data["valley_map"]["sigma"] = 0.0
    data["valley_map"]["mu_r"] = 30.0
    vmap = cfgmod.build_map(data)
    assert vmap.x_min == -400.0
    assert vmap.x_max >= 10400.0 - 1.0
    assert vmap.delta_r[0] == 30.0
    # explicit seed overrides the config seed
    vmap2 = cfgmod.build_map(data, seed=42)
    assert vmap2.meta["seed"] == 42


def test_build_map_from_file(tmp_path):
    from spinshuttle.valleymap import generate_valley_map

    src = generate_valley_map(extent=(0.0, 200.0), seed=1)
    path = tmp_path / "m.csv"
    src.save(path)
    data = cfgmod.default_config()
    data["valley_map"]["path"] = str(path)
    vmap = cfgmod.build_map(data)
    assert vmap.n_points == src.n_points


def test_ga_stop_threshold_sentinel():
    data = cfgmod.default_config()
    data["ga"]["stop_threshold"] = -1.0
    ga = cfgmod.build_ga(data)
    assert ga.stop_threshold is None
