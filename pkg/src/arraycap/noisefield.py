"""Spatial-noise covariance matrices for standard and custom noise fields.

Every constructor returns a Hermitian, positive-semidefinite matrix whose
diagonal equals the per-microphone noise power.  The coherence between two
microphones at distance l and frequency f is

* spherically diffuse:   sin(x)/x      with x = 2 pi f l / c
* cylindrically diffuse: J0(x)

both divided by (1 + incoherent_fraction) off the diagonal, so the fraction
acts as the ratio of incoherent to coherent noise power at each microphone
while the total diagonal power stays fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j0 as _bessel_j0

from .errors import (
    DegenerateCovarianceError,
    GridRangeError,
    InvalidArgumentError,
    TableParseError,
)
from .geometry import ArrayGeometry, DistanceMatrix
from .wavefield import TWO_PI, SourceSpec, steering_vector

__all__ = [
    "NoiseCovariance",
    "AngularDensity",
    "InterfererSpec",
    "NoiseModel",
    "sinc_coherence",
    "bessel_j0_coherence",
    "covariance_incoherent",
    "covariance_spherical_diffuse",
    "covariance_cylindrical_diffuse",
    "covariance_from_angular_density",
    "add_interference",
    "mix_incoherent",
    "load_angular_density",
    "save_angular_density",
]

_PSD_TOL = 1e-10
_DIAG_TOL = 1e-9


def sinc_coherence(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def bessel_j0_coherence(x):
    """Bessel function of the first kind, order zero."""
    return _bessel_j0(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class NoiseCovariance:
    """M x M Hermitian PSD spatial-noise covariance at one frequency.

    ``noise_power`` is the per-microphone power on the diagonal.  When
    ``interference_augmented`` is set the diagonal is allowed to exceed
    ``noise_power`` (rank-one interferer terms add to it).
    """

    matrix: np.ndarray
    frequency: float
    noise_power: float
    interference_augmented: bool = False

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise InvalidArgumentError(f"covariance must be a square matrix, got shape {g.shape}")
        g = 0.5 * (g + g.conj().T)
        power = float(self.noise_power)
        if power < 0.0:
            raise InvalidArgumentError(f"noise power must be >= 0, got {power}")
        scale = max(power, float(np.max(np.abs(g))), 1e-300)
        if not self.interference_augmented:
            if np.max(np.abs(np.diag(g) - power)) > _DIAG_TOL * scale:
                raise InvalidArgumentError(
                    "covariance diagonal does not equal the stated noise power"
                )
        eig = np.linalg.eigvalsh(g)
        if eig[0] < -_PSD_TOL * max(eig[-1], 0.0):
            raise DegenerateCovarianceError(
                f"covariance is not positive semidefinite (min eigenvalue {eig[0]:.3e}); "
                "add an incoherent component (incoherent_fraction > 0)"
            )
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "frequency", float(self.frequency))
        object.__setattr__(self, "noise_power", power)

    @property
    def mic_count(self) -> int:
        return self.matrix.shape[0]


def covariance_incoherent(
    mic_count: int, noise_power: float, frequency: float = 0.0
) -> NoiseCovariance:
    """Spatially white noise: a scaled identity matrix."""
    if mic_count < 1:
        raise InvalidArgumentError(f"mic_count must be >= 1, got {mic_count}")
    if not (noise_power > 0.0):
        raise InvalidArgumentError(f"noise power must be > 0, got {noise_power}")
    return NoiseCovariance(noise_power * np.eye(mic_count, dtype=complex), frequency, noise_power)


def _diffuse(distances, f, noise_power, incoherent_fraction, c, coherence):
    if not (noise_power > 0.0):
        raise InvalidArgumentError(f"noise power must be > 0, got {noise_power}")
    if incoherent_fraction < 0.0:
        raise InvalidArgumentError(
            f"incoherent fraction must be >= 0, got {incoherent_fraction}"
        )
    if f < 0.0:
        raise InvalidArgumentError(f"frequency must be >= 0, got {f}")
    if not (c > 0.0):
        raise InvalidArgumentError(f"speed of sound must be > 0, got {c}")
    d = distances.entries
    g = noise_power * coherence(TWO_PI * f * d / c) / (1.0 + incoherent_fraction)
    np.fill_diagonal(g, noise_power)
    return NoiseCovariance(g.astype(complex), f, noise_power)


def covariance_spherical_diffuse(
    distances: DistanceMatrix,
    f: float,
    noise_power: float,
    incoherent_fraction: float = 0.0,
    c: float = 343.0,
) -> NoiseCovariance:
    """Spherically isotropic diffuse noise (sin(x)/x coherence)."""
    return _diffuse(distances, f, noise_power, incoherent_fraction, c, sinc_coherence)


def covariance_cylindrical_diffuse(
    distances: DistanceMatrix,
    f: float,
    noise_power: float,
    incoherent_fraction: float = 0.0,
    c: float = 343.0,
) -> NoiseCovariance:
    """Cylindrically isotropic diffuse noise (J0 coherence).

    The closed form assumes the microphones are coplanar with the plane
    normal to the cylinder axis; this is not enforced.
    """
    return _diffuse(distances, f, noise_power, incoherent_fraction, c, bessel_j0_coherence)


@dataclass(frozen=True, eq=False)
class AngularDensity:
    """Nonnegative noise power density sampled on a direction grid.

    ``values`` has shape (F, A, P) when a frequency grid is present, or
    (A, P) for a frequency-independent density.  The azimuth grid lives in
    [0, 2*pi) and is treated as periodic; the polar grid must cover [0, pi]
    (a single polar node means the density is constant in polar angle).
    """

    azimuth_grid: np.ndarray
    polar_grid: np.ndarray
    values: np.ndarray
    freq_grid: np.ndarray | None = None

    def __post_init__(self):
        ag = np.asarray(self.azimuth_grid, dtype=float)
        pg = np.asarray(self.polar_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        fg = None if self.freq_grid is None else np.asarray(self.freq_grid, dtype=float)
        for label, g in (("azimuth", ag), ("polar", pg)):
            if g.ndim != 1 or g.size < 1:
                raise InvalidArgumentError(f"{label} grid must be a non-empty 1-D array")
            if g.size > 1 and not np.all(np.diff(g) > 0.0):
                raise InvalidArgumentError(f"{label} grid must be strictly ascending")
        if np.any(ag < 0.0) or np.any(ag >= TWO_PI):
            raise InvalidArgumentError("azimuth grid values must lie in [0, 2*pi)")
        if np.any(pg < 0.0) or np.any(pg > np.pi):
            raise InvalidArgumentError("polar grid values must lie in [0, pi]")
        if pg.size > 1 and (pg[0] > 1e-9 or pg[-1] < np.pi - 1e-9):
            raise InvalidArgumentError("a multi-node polar grid must cover [0, pi]")
        expected = (ag.size, pg.size)
        if fg is not None:
            if fg.ndim != 1 or fg.size < 1 or (fg.size > 1 and not np.all(np.diff(fg) > 0.0)):
                raise InvalidArgumentError("frequency grid must be non-empty and strictly ascending")
            expected = (fg.size, ag.size, pg.size)
        if vals.shape != expected:
            raise InvalidArgumentError(
                f"density values shape {vals.shape} does not match grids {expected}"
            )
        if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("density samples must be finite and >= 0")
        for arr in (ag, pg, vals) + (() if fg is None else (fg,)):
            arr.setflags(write=False)
        object.__setattr__(self, "azimuth_grid", ag)
        object.__setattr__(self, "polar_grid", pg)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "freq_grid", fg)

    @classmethod
    def isotropic(cls, total_power: float) -> "AngularDensity":
        """Constant density integrating to ``total_power`` over the sphere."""
        if total_power < 0.0:
            raise InvalidArgumentError(f"total power must be >= 0, got {total_power}")
        level = total_power / (4.0 * np.pi)
        return cls(np.array([0.0]), np.array([np.pi / 2.0]), np.full((1, 1), level))

    def at_frequency(self, f: float) -> np.ndarray:
        """Density samples (A, P) at frequency f, linearly interpolated."""
        if self.freq_grid is None:
            return self.values
        grid = self.freq_grid
        if grid.size == 1:
            if abs(f - grid[0]) > 1e-9 * max(1.0, abs(float(grid[0]))):
                raise GridRangeError(
                    f"frequency {f} is outside the single-node density grid at {grid[0]}"
                )
            return self.values[0]
        if f < grid[0] or f > grid[-1]:
            raise GridRangeError(
                f"frequency {f} is outside the density grid hull [{grid[0]}, {grid[-1]}]"
            )
        idx = int(np.searchsorted(grid, f, side="right") - 1)
        if idx >= grid.size - 1:
            return self.values[-1]
        t = (f - grid[idx]) / (grid[idx + 1] - grid[idx])
        return (1.0 - t) * self.values[idx] + t * self.values[idx + 1]

    def sample(self, f: float, azimuths: np.ndarray, polars: np.ndarray) -> np.ndarray:
        """Bilinear lookup on an (azimuth, polar) product grid of query points.

        Azimuth interpolation wraps periodically; polar queries stay inside
        the grid by construction.  Returns an array of shape (len(azimuths),
        len(polars)).
        """
        vals = self.at_frequency(f)
        ai, aw = _periodic_weights(self.azimuth_grid, np.asarray(azimuths, dtype=float))
        pi_, pw = _line_weights(self.polar_grid, np.asarray(polars, dtype=float))
        # (A_q, P_q) <- sum over the 2x2 bracketing nodes
        out = np.zeros((ai.shape[0], pi_.shape[0]))
        for a_side in range(2):
            for p_side in range(2):
                w = aw[:, a_side][:, None] * pw[:, p_side][None, :]
                out += w * vals[np.ix_(ai[:, a_side], pi_[:, p_side])]
        return out


def _periodic_weights(grid: np.ndarray, x: np.ndarray):
    """Bracketing indices/weights on a periodic azimuth grid over [0, 2*pi)."""
    x = np.mod(x, TWO_PI)
    n = grid.size
    idx = np.empty((x.size, 2), dtype=int)
    w = np.empty((x.size, 2))
    if n == 1:
        idx[:] = 0
        w[:, 0] = 1.0
        w[:, 1] = 0.0
        return idx, w
    hi = np.searchsorted(grid, x, side="right")
    lo = hi - 1
    wrap = hi >= n
    x0 = grid[lo]
    x1 = np.where(wrap, grid[0] + TWO_PI, grid[np.minimum(hi, n - 1)])
    below = lo < 0  # x smaller than the first node: wrap the low side
    x0 = np.where(below, grid[-1] - TWO_PI, x0)
    lo = np.where(below, n - 1, lo)
    span = x1 - x0
    t = np.where(span > 0.0, (x - x0) / np.where(span > 0.0, span, 1.0), 0.0)
    idx[:, 0] = lo
    idx[:, 1] = np.where(wrap, 0, np.minimum(hi, n - 1))
    w[:, 0] = 1.0 - t
    w[:, 1] = t
    return idx, w


def _line_weights(grid: np.ndarray, x: np.ndarray):
    """Bracketing indices/weights on a bounded grid, clamped to the hull."""
    n = grid.size
    idx = np.empty((x.size, 2), dtype=int)
    w = np.empty((x.size, 2))
    if n == 1:
        idx[:] = 0
        w[:, 0] = 1.0
        w[:, 1] = 0.0
        return idx, w
    xc = np.clip(x, grid[0], grid[-1])
    hi = np.clip(np.searchsorted(grid, xc, side="right"), 1, n - 1)
    lo = hi - 1
    span = grid[hi] - grid[lo]
    t = (xc - grid[lo]) / span
    idx[:, 0] = lo
    idx[:, 1] = hi
    w[:, 0] = 1.0 - t
    w[:, 1] = t
    return idx, w


def covariance_from_angular_density(
    geometry: ArrayGeometry,
    f: float,
    density: AngularDensity,
    c: float = 343.0,
    quadrature_resolution: tuple[int, int] = (64, 32),
) -> NoiseCovariance:
    """Noise covariance from a directional power density.

    Integrates steering outer products weighted by the density over the full
    sphere with the trapezoid rule on a uniform (azimuth, polar) product
    grid, periodic in azimuth, with sin(polar) weights.  The result is
    symmetrized to Hermitian and its common diagonal value becomes the
    reported noise power.
    """
    n_az, n_pol = int(quadrature_resolution[0]), int(quadrature_resolution[1])
    if n_az < 8 or n_pol < 4:
        raise InvalidArgumentError(
            f"quadrature resolution must be at least (8, 4), got ({n_az}, {n_pol})"
        )
    if not (c > 0.0):
        raise InvalidArgumentError(f"speed of sound must be > 0, got {c}")
    azimuths = TWO_PI * np.arange(n_az) / n_az
    polars = np.linspace(0.0, np.pi, n_pol)
    w_az = np.full(n_az, TWO_PI / n_az)  # periodic trapezoid
    h_pol = np.pi / (n_pol - 1)
    w_pol = np.full(n_pol, h_pol)
    w_pol[0] *= 0.5
    w_pol[-1] *= 0.5
    dens = density.sample(f, azimuths, polars)  # (A, P)
    weights = ((w_az[:, None] * w_pol[None, :]) * np.sin(polars)[None, :] * dens).ravel()
    az_g, pol_g = np.meshgrid(azimuths, polars, indexing="ij")
    sp = np.sin(pol_g).ravel()
    u = np.stack(
        [np.cos(az_g).ravel() * sp, np.sin(az_g).ravel() * sp, np.cos(pol_g).ravel()],
        axis=1,
    )  # (A*P, 3) unit vectors
    tau = -(u @ geometry.positions.T) / c
    d = np.exp(-1j * TWO_PI * f * tau)  # (A*P, M) steering entries per node
    gamma = (d * weights[:, None]).T @ d.conj()
    gamma = 0.5 * (gamma + gamma.conj().T)
    diag = np.real(np.diag(gamma))
    power = float(np.mean(diag))
    np.fill_diagonal(gamma, power)
    return NoiseCovariance(gamma, f, power)


@dataclass(frozen=True)
class InterfererSpec:
    """A point interferer: a source spec plus its power in linear units."""

    source: SourceSpec
    power: float = 1.0

    def __post_init__(self):
        if not (float(self.power) >= 0.0):
            raise InvalidArgumentError(f"interferer power must be >= 0, got {self.power}")


def add_interference(
    base: NoiseCovariance,
    interferer: InterfererSpec,
    geometry: ArrayGeometry,
    c: float = 343.0,
) -> NoiseCovariance:
    """Base covariance plus the interferer's rank-one steering outer product.

    The output keeps the base noise power for SNR bookkeeping but its
    diagonal is no longer that power; it is flagged accordingly.
    """
    if geometry.mic_count != base.mic_count:
        raise InvalidArgumentError(
            f"geometry has {geometry.mic_count} microphones, covariance {base.mic_count}"
        )
    d = steering_vector(geometry, base.frequency, interferer.source, c).entries
    g = base.matrix + interferer.power * np.outer(d, d.conj())
    return NoiseCovariance(g, base.frequency, base.noise_power, interference_augmented=True)


def mix_incoherent(base: NoiseCovariance, incoherent_fraction: float) -> NoiseCovariance:
    """Blend an incoherent component into a covariance at fixed diagonal power.

    Returns (base + fraction * power * I) / (1 + fraction): the off-diagonal
    coherence shrinks by 1/(1 + fraction) while the diagonal stays equal to
    the base noise power.
    """
    if incoherent_fraction < 0.0:
        raise InvalidArgumentError(
            f"incoherent fraction must be >= 0, got {incoherent_fraction}"
        )
    if base.interference_augmented:
        raise InvalidArgumentError("cannot mix an incoherent fraction into an interference-augmented covariance")
    eye = np.eye(base.mic_count)
    g = (base.matrix + incoherent_fraction * base.noise_power * eye) / (1.0 + incoherent_fraction)
    return NoiseCovariance(g, base.frequency, base.noise_power)


_DENSITY_HEADER = ["freq_hz", "azimuth_rad", "polar_rad", "power"]


def load_angular_density(path) -> AngularDensity:
    """Read an angular density from CSV.

    Columns: ``freq_hz, azimuth_rad, polar_rad, power`` with a mandatory
    header; rows in any order forming a complete Cartesian grid.
    """
    import csv

    nodes: dict[tuple[float, float, float], float] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _DENSITY_HEADER:
            raise TableParseError(f"{path}: line 1: expected header {','.join(_DENSITY_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise TableParseError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            try:
                key = (float(row[0]), float(row[1]), float(row[2]))
                val = float(row[3])
            except ValueError as exc:
                raise TableParseError(f"{path}: line {lineno}: {exc}") from exc
            if key in nodes:
                raise TableParseError(f"{path}: line {lineno}: duplicate node {key}")
            nodes[key] = val
    if not nodes:
        raise TableParseError(f"{path}: no data rows")
    freqs = sorted({k[0] for k in nodes})
    azimuths = sorted({k[1] for k in nodes})
    polars = sorted({k[2] for k in nodes})
    if len(nodes) != len(freqs) * len(azimuths) * len(polars):
        for f in freqs:
            for az in azimuths:
                for pol in polars:
                    if (f, az, pol) not in nodes:
                        raise TableParseError(
                            f"{path}: incomplete grid, missing node (f={f}, az={az}, pol={pol})"
                        )
    values = np.empty((len(freqs), len(azimuths), len(polars)))
    fi = {f: i for i, f in enumerate(freqs)}
    ai = {a: i for i, a in enumerate(azimuths)}
    pi_ = {p: i for i, p in enumerate(polars)}
    for (f, az, pol), val in nodes.items():
        values[fi[f], ai[az], pi_[pol]] = val
    return AngularDensity(np.asarray(azimuths), np.asarray(polars), values, np.asarray(freqs))


def save_angular_density(density: AngularDensity, path) -> None:
    """Write an angular density as CSV (inverse of load_angular_density)."""
    import csv

    freqs = density.freq_grid if density.freq_grid is not None else np.array([0.0])
    vals = density.values if density.freq_grid is not None else density.values[None, ...]
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_DENSITY_HEADER)
        for i, f in enumerate(freqs):
            for j, az in enumerate(density.azimuth_grid):
                for k, pol in enumerate(density.polar_grid):
                    writer.writerow(
                        [repr(float(f)), repr(float(az)), repr(float(pol)), repr(float(vals[i, j, k]))]
                    )


@dataclass(frozen=True)
class NoiseModel:
    """A named recipe for building noise covariances at any frequency.

    ``kind`` is one of ``incoherent``, ``spherical``, ``cylindrical`` or
    ``angular_density``.  Instances are what scans and the optimizer carry
    around; ``covariance`` instantiates the matrix for a given geometry and
    frequency.
    """

    kind: str
    noise_power: float = 1.0
    incoherent_fraction: float = 0.0
    density: AngularDensity | None = None
    quadrature_resolution: tuple[int, int] = (64, 32)

    _KINDS = ("incoherent", "spherical", "cylindrical", "angular_density")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidArgumentError(
                f"unknown noise model '{self.kind}'; expected one of {self._KINDS}"
            )
        if self.kind == "angular_density" and self.density is None:
            raise InvalidArgumentError("angular_density noise model requires a density")
        if self.kind != "angular_density" and not (self.noise_power > 0.0):
            raise InvalidArgumentError(f"noise power must be > 0, got {self.noise_power}")
        if self.incoherent_fraction < 0.0:
            raise InvalidArgumentError(
                f"incoherent fraction must be >= 0, got {self.incoherent_fraction}"
            )

    @classmethod
    def incoherent(cls, noise_power: float = 1.0) -> "NoiseModel":
        return cls("incoherent", noise_power)

    @classmethod
    def spherical(cls, noise_power: float = 1.0, incoherent_fraction: float = 0.0) -> "NoiseModel":
        return cls("spherical", noise_power, incoherent_fraction)

    @classmethod
    def cylindrical(cls, noise_power: float = 1.0, incoherent_fraction: float = 0.0) -> "NoiseModel":
        return cls("cylindrical", noise_power, incoherent_fraction)

    @classmethod
    def angular_density(
        cls,
        density: AngularDensity,
        incoherent_fraction: float = 0.0,
        quadrature_resolution: tuple[int, int] = (64, 32),
    ) -> "NoiseModel":
        return cls("angular_density", 0.0, incoherent_fraction, density, quadrature_resolution)

    def covariance(self, geometry: ArrayGeometry, f: float, c: float = 343.0) -> NoiseCovariance:
        from .geometry import pairwise_distances

        if self.kind == "incoherent":
            return covariance_incoherent(geometry.mic_count, self.noise_power, f)
        if self.kind == "spherical":
            return covariance_spherical_diffuse(
                pairwise_distances(geometry), f, self.noise_power, self.incoherent_fraction, c
            )
        if self.kind == "cylindrical":
            return covariance_cylindrical_diffuse(
                pairwise_distances(geometry), f, self.noise_power, self.incoherent_fraction, c
            )
        cov = covariance_from_angular_density(
            geometry, f, self.density, c, self.quadrature_resolution
        )
        if self.incoherent_fraction > 0.0:
            cov = mix_incoherent(cov, self.incoherent_fraction)
        return cov

    @property
    def id(self) -> str:
        """Stable identifier used in output metadata."""
        if self.kind == "incoherent":
            return f"incoherent(power={self.noise_power!r})"
        if self.kind in ("spherical", "cylindrical"):
            return (
                f"{self.kind}(power={self.noise_power!r},"
                f"incoherent_fraction={self.incoherent_fraction!r})"
            )
        res = self.quadrature_resolution
        return (
            f"angular_density(resolution=({res[0]},{res[1]}),"
            f"incoherent_fraction={self.incoherent_fraction!r})"
        )
