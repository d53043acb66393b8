import numpy as np
import pytest

from spinshuttle.errors import (
    DomainError,
    MapParseError,
    ResolutionError,
    UnsupportedVersionError,
)
from spinshuttle.valleymap import ValleyMap, generate_valley_map


def test_zero_sigma_gives_constant_map():
    m = generate_valley_map(mu_r=12.0, mu_i=-3.0, sigma=0.0, extent=(0.0, 100.0), seed=1)
    assert np.all(m.delta_r == 12.0)
    assert np.all(m.delta_i == -3.0)


def test_field_statistics_across_seeds():
    vals_r, vals_i = [], []
    for seed in range(200):
        m = generate_valley_map(extent=(0.0, 160.0), seed=seed)
        vals_r.append(m.delta_r[80])
        vals_i.append(m.delta_i[80])
    vals_r = np.array(vals_r)
    assert abs(vals_r.mean() - 20.0) < 2.0  # 10% of the mean
    assert abs(vals_r.std(ddof=1) - 15.0) < 1.5
    assert abs(np.mean(vals_i)) < 0.1 * 15.0


def test_autocorrelation_length():
    m = generate_valley_map(extent=(0.0, 150000.0), seed=11)
    f = m.delta_r - m.delta_r.mean()
    lag = int(round(15.0 / m.dx))
    ac = float(np.mean(f[:-lag] * f[lag:]) / np.mean(f * f))
    assert ac == pytest.approx(np.exp(-0.5), abs=0.1)


def test_field_normality():
    m = generate_valley_map(extent=(0.0, 150000.0), seed=3)
    z = (m.delta_r - m.delta_r.mean()) / m.delta_r.std()
    assert abs(np.mean(z**3)) < 0.15
    assert abs(np.mean(z**4) - 3.0) < 0.3


def test_reproducibility():
    a = generate_valley_map(extent=(0.0, 500.0), seed=21)
    b = generate_valley_map(extent=(0.0, 500.0), seed=21)
    assert np.array_equal(a.delta_r, b.delta_r)
    assert np.array_equal(a.delta_i, b.delta_i)


def test_sampling_and_interpolation():
    m = ValleyMap(0.0, 1.0, np.array([1.0, 3.0, 5.0]), np.array([0.0, -2.0, 2.0]))
    assert m.sample(1.0) == (3.0, -2.0)
    dr, di = m.sample(0.5)
    assert dr == pytest.approx(2.0) and di == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        m.sample(2.5)
    with pytest.raises(DomainError):
        m.sample(-0.5)


def test_valley_splitting():
    m = ValleyMap(0.0, 1.0, np.array([3.0, 0.0]), np.array([4.0, 0.0]))
    assert m.valley_splitting(0.0) == pytest.approx(10.0)
    assert m.valley_splitting(1.0) == 0.0


def test_low_splitting_fraction_tunable():
    m_default = generate_valley_map(seed=5)
    m_large = generate_valley_map(mu_r=120.0, sigma=5.0, seed=5)
    ev_default = m_default.valley_splitting(m_default.positions())
    ev_large = m_large.valley_splitting(m_large.positions())
    frac_default = float((ev_default < 20.0).mean())
    frac_large = float((ev_large < 20.0).mean())
    assert 0.0 < frac_default < 1.0
    assert frac_large == 0.0
    assert frac_default > frac_large


def test_interpolated_splitting_is_continuous():
    m = generate_valley_map(extent=(0.0, 2000.0), seed=9)
    x = np.linspace(0.0, 2000.0, 40001)
    ev = m.valley_splitting(x)
    node_step = np.abs(np.diff(m.valley_splitting(m.positions()))).max()
    assert np.abs(np.diff(ev)).max() <= node_step + 1e-12


def test_resolution_guard():
    with pytest.raises(ResolutionError):
        generate_valley_map(corr_length=3.0, dx=1.0, extent=(0.0, 100.0))


def test_save_load_round_trip(tmp_path):
    m = generate_valley_map(extent=(-50.0, 450.0), seed=17)
    path = tmp_path / "map.csv"
    m.save(path)
    loaded = ValleyMap.load(path)
    assert np.array_equal(loaded.delta_r, m.delta_r)
    assert np.array_equal(loaded.delta_i, m.delta_i)
    assert loaded.x0 == m.x0 and loaded.dx == m.dx
    assert loaded.meta["seed"] == 17


def test_load_truncated_file(tmp_path):
    m = generate_valley_map(extent=(0.0, 100.0), seed=2)
    path = tmp_path / "map.csv"
    m.save(path)
    lines = path.read_text().splitlines()
    (tmp_path / "trunc.csv").write_text("\n".join(lines[:9]))
    with pytest.raises(MapParseError):
        ValleyMap.load(tmp_path / "trunc.csv")


def test_load_bad_row(tmp_path):
    m = generate_valley_map(extent=(0.0, 100.0), seed=2)
    path = tmp_path / "map.csv"
    m.save(path)
    text = path.read_text().replace("\n10.0,", "\nten,", 1)
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(MapParseError):
        ValleyMap.load(tmp_path / "bad.csv")


def test_load_version_mismatch(tmp_path):
    m = generate_valley_map(extent=(0.0, 100.0), seed=2)
    path = tmp_path / "map.csv"
    m.save(path)
    text = path.read_text().replace("# version=1", "# version=99")
    (tmp_path / "v99.csv").write_text(text)
    with pytest.raises(UnsupportedVersionError):
        ValleyMap.load(tmp_path / "v99.csv")
