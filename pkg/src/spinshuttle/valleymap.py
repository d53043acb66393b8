"""Synthetic disorder-informed valley-coupling maps Delta(x).

Real and imaginary parts are independent stationary Gaussian random fields
with a squared-exponential covariance C(d) = sigma^2 exp(-d^2 / (2 l_c^2)),
generated by smoothing white noise with a Gaussian kernel on a padded grid.
This is a statistics-level stand-in for atomistic alloy-disorder models;
mean, pointwise sigma and correlation length are exposed so users can match
published statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MapParseError, ResolutionError, UnsupportedVersionError

MAP_FORMAT_VERSION = 1

#: Default generation parameters (toolkit defaults, not published values):
#: occasional near-zero-splitting regions per 10 um of channel.
DEFAULT_MAP_PARAMS = dict(mu_r=20.0, mu_i=0.0, sigma=15.0, corr_length=15.0, dx=1.0)


@dataclass
class ValleyMap:
    """Sampled complex intervalley coupling on a uniform spatial grid.

    x0 is the first grid position (nm), dx the spacing (nm); delta_r and
    delta_i are in ueV. Maps are immutable by convention after creation and
    safe to share across concurrent propagations.
    """

    x0: float
    dx: float
    delta_r: np.ndarray
    delta_i: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delta_r = np.ascontiguousarray(self.delta_r, dtype=float)
        self.delta_i = np.ascontiguousarray(self.delta_i, dtype=float)
        if self.dx <= 0:
            raise DomainError("grid spacing must be positive")
        if self.delta_r.shape != self.delta_i.shape or self.delta_r.ndim != 1:
            raise DomainError("delta_r and delta_i must be 1-d arrays of equal length")
        if self.delta_r.size < 2:
            raise DomainError("a map needs at least two grid points")

    @property
    def n_points(self) -> int:
        return self.delta_r.size

    @property
    def x_min(self) -> float:
        return self.x0

    @property
    def x_max(self) -> float:
        return self.x0 + (self.n_points - 1) * self.dx

    def positions(self) -> np.ndarray:
        return self.x0 + np.arange(self.n_points) * self.dx

    def _check_range(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_min - 1e-9) or np.any(x > self.x_max + 1e-9):
            raise DomainError(
                f"position outside map extent [{self.x_min}, {self.x_max}] nm"
            )
        return x

    def sample(self, x):
        """Linear interpolation of (delta_r, delta_i) at position(s) x."""
        x = self._check_range(x)
        xs = self.positions()
        return np.interp(x, xs, self.delta_r), np.interp(x, xs, self.delta_i)

    def valley_splitting(self, x):
        """Local splitting E_v(x) = 2 |Delta(x)| in ueV."""
        dr, di = self.sample(x)
        return 2.0 * np.hypot(dr, di)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# spinshuttle valley map\n")
            fh.write(f"# version={MAP_FORMAT_VERSION}\n")
            for key in sorted(self.meta):
                fh.write(f"# {key}={self.meta[key]!r}\n")
            fh.write(f"# x0={self.x0!r}\n")
            fh.write(f"# dx={self.dx!r}\n")
            fh.write("x,delta_r,delta_i\n")
            for i, x in enumerate(self.positions()):
                fh.write(
                    f"{float(x)!r},{float(self.delta_r[i])!r},{float(self.delta_i[i])!r}\n"
                )

    @classmethod
    def load(cls, path) -> "ValleyMap":
        meta = {}
        x0 = dx = None
        version = None
        rows_r, rows_i = [], []
        n_expected = None
        with open(path) as fh:
            lines = fh.readlines()
        if not lines:
            raise MapParseError(f"{path}: empty file")
        header_seen = False
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    key = key.strip()
                    value = value.strip()
                    if key == "version":
                        version = value
                    elif key == "x0":
                        x0 = float(value)
                    elif key == "dx":
                        dx = float(value)
                    else:
                        meta[key] = _parse_meta_value(value)
                continue
            if line.startswith("x,"):
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise MapParseError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                _, dr, di = (float(p) for p in parts)
            except ValueError as exc:
                raise MapParseError(f"{path}:{lineno}: non-numeric field ({exc})") from exc
            rows_r.append(dr)
            rows_i.append(di)
        if version is None:
            raise MapParseError(f"{path}: missing version header")
        if version != str(MAP_FORMAT_VERSION):
            raise UnsupportedVersionError(
                f"{path}: map version {version} is not supported (expected {MAP_FORMAT_VERSION})"
            )
        if x0 is None or dx is None or not header_seen:
            raise MapParseError(f"{path}: incomplete header (need x0, dx and column row)")
        if len(rows_r) < 2:
            raise MapParseError(f"{path}: truncated file, {len(rows_r)} data rows")
        return cls(x0=x0, dx=dx, delta_r=np.array(rows_r), delta_i=np.array(rows_i), meta=meta)


def _parse_meta_value(text: str):
    text = text.strip()
    if text.startswith("'") and text.endswith("'"):
        return text[1:-1]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _gaussian_smooth_white(white: np.ndarray, dx: float, corr_length: float) -> np.ndarray:
    """Filter white noise to a unit-variance field with SE covariance."""
    # Kernel std s = l_c / sqrt(2): the kernel autocorrelation then has the
    # target exp(-d^2 / (2 l_c^2)) shape.
    s = corr_length / math.sqrt(2.0)
    n = white.size
    half = n // 2
    d = (np.arange(n) - half) * dx
    kernel = np.exp(-(d * d) / (2.0 * s * s))
    norm = math.sqrt(float(np.sum(kernel * kernel)))
    spec = np.fft.rfft(white) * np.fft.rfft(np.roll(kernel, -half))
    return np.fft.irfft(spec, n=n) / norm


def generate_valley_map(
    mu_r: float = DEFAULT_MAP_PARAMS["mu_r"],
    mu_i: float = DEFAULT_MAP_PARAMS["mu_i"],
    sigma: float = DEFAULT_MAP_PARAMS["sigma"],
    corr_length: float = DEFAULT_MAP_PARAMS["corr_length"],
    dx: float = DEFAULT_MAP_PARAMS["dx"],
    extent: tuple = (-400.0, 10400.0),
    seed: int = 0,
) -> ValleyMap:
    """Draw a disorder map with the given field statistics.

    delta_r and delta_i are independent with means (mu_r, mu_i), pointwise
    standard deviation sigma and Gaussian covariance of correlation length
    corr_length (all ueV / nm). Deterministic for a given seed.
    """
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    if corr_length <= 0 or dx <= 0:
        raise DomainError("corr_length and dx must be positive")
    if dx > corr_length / 4.0:
        raise ResolutionError(
            f"dx = {dx} nm is too coarse for corr_length = {corr_length} nm "
            "(need dx <= corr_length / 4)"
        )
    x_min, x_max = float(extent[0]), float(extent[1])
    if x_max <= x_min:
        raise DomainError("extent must satisfy x_max > x_min")

    n = int(math.floor((x_max - x_min) / dx + 1e-9)) + 1
    meta = dict(
        seed=int(seed), mu_r=mu_r, mu_i=mu_i, sigma=sigma, corr_length=corr_length
    )
    if sigma == 0.0:
        return ValleyMap(x_min, dx, np.full(n, mu_r), np.full(n, mu_i), meta)

    pad = int(math.ceil(6.0 * corr_length / dx))
    n_total = n + 2 * pad
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((2, n_total))
    smooth_r = _gaussian_smooth_white(white[0], dx, corr_length)[pad : pad + n]
    smooth_i = _gaussian_smooth_white(white[1], dx, corr_length)[pad : pad + n]
    return ValleyMap(
        x_min, dx, mu_r + sigma * smooth_r, mu_i + sigma * smooth_i, meta
    )
