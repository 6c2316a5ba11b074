"""Channel capacity of the acoustic propagation path through an array.

The array is treated as a single-input multiple-output channel: a source
with per-microphone SNR ``snr`` observed through steering vector d in noise
with covariance G.  Whitening G by its eigendecomposition G = U diag(s) U'
turns the problem into the white-noise case, giving the narrowband capacity

    C = log2(1 + snr * power * ||diag(s)^(-1/2) U' d||^2)
      = log2(1 + snr * d' R^(-1) d),    R = G / power,

in bits/s/Hz.  The metric depends only on geometry, noise field, source
position and SNR; no beamformer enters anywhere.  Broadband capacity is a
spectrally weighted average of narrowband values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularCovarianceError
from .geometry import ArrayGeometry
from .noisefield import NoiseCovariance, NoiseModel
from .wavefield import (
    Direction,
    FarField,
    NearField,
    SourceSpec,
    SteeringVector,
    steering_far_field,
    steering_vector,
)

__all__ = [
    "Whitener",
    "CapacityResult",
    "SpectralWeights",
    "CapacityMap",
    "whiten",
    "whitened_channel",
    "narrowband_capacity",
    "broadband_capacity",
    "wiener_mmse",
    "expected_capacity_under_position_uncertainty",
    "azimuth_scan",
    "frequency_scan",
    "write_capacity_csv",
    "read_capacity_csv",
]

_RANK_TOL = 1e-12
LOG2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class Whitener:
    """Eigendecomposition U diag(s) U' of a noise covariance.

    Eigenvalues are sorted descending and each eigenvector's phase is fixed
    so that its largest-magnitude entry is real and positive, making the
    factors deterministic for a given input matrix.
    """

    U: np.ndarray
    s: np.ndarray
    frequency: float

    def __post_init__(self):
        self.U.setflags(write=False)
        self.s.setflags(write=False)

    @property
    def mic_count(self) -> int:
        return self.s.size


def whiten(cov: NoiseCovariance) -> Whitener:
    """Eigendecomposition of a noise covariance, for channel whitening.

    Raises SingularCovarianceError when the smallest eigenvalue falls below
    1e-12 of the largest: a rank-deficient covariance carries no consistent
    whitening, and the caller should add an incoherent component instead.
    """
    vals, vecs = np.linalg.eigh(cov.matrix)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    smax = float(vals[0])
    smin = float(vals[-1])
    if smin < _RANK_TOL * max(smax, 0.0) or smax <= 0.0:
        ratio = smin / smax if smax > 0.0 else float("nan")
        raise SingularCovarianceError(
            f"noise covariance is rank deficient (eigenvalue ratio {ratio:.3e} < {_RANK_TOL}); "
            "add an incoherent component (incoherent_fraction > 0) to regularize it"
        )
    # Fix each eigenvector's free phase: largest-magnitude entry real positive.
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        pivot = col[np.argmax(np.abs(col))]
        vecs[:, k] = col * (pivot.conjugate() / abs(pivot))
    return Whitener(vecs, vals.astype(float), cov.frequency)


def whitened_channel(w: Whitener, d: SteeringVector) -> np.ndarray:
    """Whitened channel vector diag(s)^(-1/2) U' d."""
    if d.mic_count != w.mic_count:
        raise InvalidArgumentError(
            f"steering vector has {d.mic_count} entries, whitener {w.mic_count}"
        )
    return (w.U.conj().T @ d.entries) / np.sqrt(w.s)


def _whitened_norm_sq(w: Whitener, entries: np.ndarray) -> float:
    proj = w.U.conj().T @ entries
    return float(np.sum((proj.real**2 + proj.imag**2) / w.s))


@dataclass(frozen=True)
class CapacityResult:
    """Narrowband capacity in bits/s/Hz, with the inputs that produced it."""

    value: float
    snr_linear: float
    frequency: float
    source: SourceSpec


def narrowband_capacity(
    d: SteeringVector, cov: NoiseCovariance, snr_linear: float
) -> CapacityResult:
    """Capacity of a single-frequency source through the array.

    ``snr_linear`` is the per-microphone SNR (source power over noise power
    at one microphone, linear scale).
    """
    if snr_linear < 0.0:
        raise InvalidArgumentError(f"snr_linear must be >= 0, got {snr_linear}")
    w = whiten(cov)
    q = _whitened_norm_sq(w, d.entries)
    value = math.log1p(snr_linear * cov.noise_power * q) / LOG2
    return CapacityResult(value, snr_linear, d.frequency, d.source)


def wiener_mmse(d: SteeringVector, cov: NoiseCovariance, source_power: float) -> float:
    """Residual error of the optimal linear multichannel estimator.

    MMSE = P / (1 + P d' G^(-1) d).  With P = snr * noise_power this equals
    P * 2^(-C) for the narrowband capacity C, so the two metrics rank
    sources identically.
    """
    if source_power < 0.0:
        raise InvalidArgumentError(f"source power must be >= 0, got {source_power}")
    w = whiten(cov)
    q = _whitened_norm_sq(w, d.entries)
    return source_power / (1.0 + source_power * q)


@dataclass(frozen=True, eq=False)
class SpectralWeights:
    """Frequency grid with nonnegative weights summing to one."""

    frequencies: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if f.ndim != 1 or f.size < 1 or w.shape != f.shape:
            raise InvalidArgumentError("frequencies and weights must be matching non-empty 1-D arrays")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(w)):
            raise InvalidArgumentError("frequencies and weights must be finite")
        if np.any(w < 0.0):
            raise InvalidArgumentError("weights must be >= 0")
        if abs(math.fsum(w.tolist()) - 1.0) > 1e-12:
            raise InvalidArgumentError("weights must sum to 1 within 1e-12")
        order = np.argsort(f, kind="stable")
        f = f[order]
        w = w[order]
        if f.size > 1 and np.any(np.diff(f) <= 0.0):
            raise InvalidArgumentError("frequencies must be distinct")
        f.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, frequencies) -> "SpectralWeights":
        f = np.asarray(frequencies, dtype=float)
        w = np.full(f.shape, 1.0 / f.size)
        # Rescale so the sum is exactly 1 despite rounding.
        w[-1] = 1.0 - math.fsum(w[:-1].tolist())
        return cls(f, w)

    @classmethod
    def one_hot(cls, frequency: float) -> "SpectralWeights":
        return cls(np.array([float(frequency)]), np.array([1.0]))

    @classmethod
    def normalized(cls, frequencies, raw_weights) -> "SpectralWeights":
        """Scale arbitrary nonnegative weights to sum exactly to one."""
        w = np.asarray(raw_weights, dtype=float)
        total = math.fsum(w.tolist())
        if not (total > 0.0):
            raise InvalidArgumentError("weights must have a positive sum")
        w = w / total
        w[-1] = 1.0 - math.fsum(w[:-1].tolist())
        return cls(np.asarray(frequencies, dtype=float), w)


def broadband_capacity(
    geometry: ArrayGeometry,
    noise_model: NoiseModel,
    source: SourceSpec,
    weights: SpectralWeights,
    snr_linear: float,
    c: float = 343.0,
) -> float:
    """Spectrally weighted average of narrowband capacities.

    Frequencies are visited in ascending order and the weighted sum is
    accumulated with compensated summation, so the result does not depend
    on evaluation order or chunking.
    """
    if snr_linear < 0.0:
        raise InvalidArgumentError(f"snr_linear must be >= 0, got {snr_linear}")
    terms = []
    for f, wgt in zip(weights.frequencies, weights.weights):
        cov = _covariance_at(noise_model, geometry, float(f), c)
        d = steering_vector(geometry, float(f), source, c)
        w = _whiten_at(cov, float(f))
        q = _whitened_norm_sq(w, d.entries)
        terms.append(wgt * math.log1p(snr_linear * cov.noise_power * q) / LOG2)
    return math.fsum(terms)


def _covariance_at(noise_model: NoiseModel, geometry, f: float, c: float) -> NoiseCovariance:
    try:
        return noise_model.covariance(geometry, f, c)
    except (SingularCovarianceError, InvalidArgumentError) as exc:
        raise type(exc)(f"at frequency {f} Hz: {exc}") from None


def _whiten_at(cov: NoiseCovariance, f: float) -> Whitener:
    try:
        return whiten(cov)
    except SingularCovarianceError as exc:
        raise SingularCovarianceError(f"at frequency {f} Hz: {exc}") from None


def expected_capacity_under_position_uncertainty(
    geometry: ArrayGeometry,
    noise_model: NoiseModel,
    source: SourceSpec,
    weights: SpectralWeights,
    snr_linear: float,
    azimuth_std: float,
    n_points: int = 9,
    c: float = 343.0,
) -> float:
    """Capacity averaged over a Gaussian azimuth localization error.

    The nominal source azimuth is perturbed by a zero-mean Gaussian error
    with standard deviation ``azimuth_std`` and the broadband capacity is
    averaged over Gauss-Hermite nodes; ``n_points`` must be odd so the
    nominal angle itself is always sampled and ``azimuth_std = 0``
    degenerates to the unperturbed capacity.
    """
    if azimuth_std < 0.0:
        raise InvalidArgumentError(f"azimuth std must be >= 0, got {azimuth_std}")
    if n_points < 1 or n_points % 2 == 0:
        raise InvalidArgumentError(f"n_points must be a positive odd integer, got {n_points}")
    nodes, gh_weights = np.polynomial.hermite.hermgauss(n_points)
    gh_weights = gh_weights / math.fsum(gh_weights.tolist())
    direction = source.direction
    terms = []
    for x, wgt in zip(nodes, gh_weights):
        offset = math.sqrt(2.0) * azimuth_std * float(x)
        shifted = _with_direction(source, direction.rotated(offset))
        terms.append(float(wgt) * broadband_capacity(geometry, noise_model, shifted, weights, snr_linear, c))
    return math.fsum(terms)


def _with_direction(source: SourceSpec, direction: Direction) -> SourceSpec:
    if isinstance(source, FarField):
        return FarField(direction)
    return type(source)(source.range_m, direction)


@dataclass(frozen=True, eq=False)
class CapacityMap:
    """Capacity values along one scan axis, with provenance metadata."""

    axis_name: str
    axis_values: np.ndarray
    values: np.ndarray
    metadata: dict

    def __post_init__(self):
        a = np.asarray(self.axis_values, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if a.ndim != 1 or a.size < 1 or v.shape != a.shape:
            raise InvalidArgumentError("axis values and capacity values must match and be non-empty")
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("capacity values must all be finite")
        a.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "axis_values", a)
        object.__setattr__(self, "values", v)


def azimuth_scan(
    geometry: ArrayGeometry,
    noise_model: NoiseModel,
    f: float,
    polar: float,
    azimuth_grid,
    snr_linear: float,
    c: float = 343.0,
) -> CapacityMap:
    """Far-field capacity at one frequency over a grid of azimuth angles."""
    grid = np.asarray(azimuth_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise InvalidArgumentError("azimuth grid must be a non-empty 1-D array")
    if snr_linear < 0.0:
        raise InvalidArgumentError(f"snr_linear must be >= 0, got {snr_linear}")
    cov = _covariance_at(noise_model, geometry, float(f), c)
    w = _whiten_at(cov, float(f))
    values = np.empty(grid.size)
    for i, az in enumerate(grid):
        d = steering_far_field(geometry, float(f), Direction(float(az), polar), c)
        q = _whitened_norm_sq(w, d.entries)
        values[i] = math.log1p(snr_linear * cov.noise_power * q) / LOG2
    meta = {
        "geometry": geometry.name,
        "noise": noise_model.id,
        "snr_db": 10.0 * math.log10(snr_linear) if snr_linear > 0.0 else float("-inf"),
        "freq_hz": float(f),
        "polar_rad": float(polar),
    }
    return CapacityMap("azimuth_rad", grid, values, meta)


def frequency_scan(
    geometry: ArrayGeometry,
    noise_model: NoiseModel,
    source: SourceSpec | Direction,
    frequency_grid,
    snr_linear: float,
    c: float = 343.0,
) -> CapacityMap:
    """Capacity of a fixed source over a grid of frequencies."""
    grid = np.asarray(frequency_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise InvalidArgumentError("frequency grid must be a non-empty 1-D array")
    if snr_linear < 0.0:
        raise InvalidArgumentError(f"snr_linear must be >= 0, got {snr_linear}")
    if isinstance(source, Direction):
        source = FarField(source)
    values = np.empty(grid.size)
    for i, f in enumerate(grid):
        cov = _covariance_at(noise_model, geometry, float(f), c)
        d = steering_vector(geometry, float(f), source, c)
        w = _whiten_at(cov, float(f))
        q = _whitened_norm_sq(w, d.entries)
        values[i] = math.log1p(snr_linear * cov.noise_power * q) / LOG2
    direction = source.direction
    meta = {
        "geometry": geometry.name,
        "noise": noise_model.id,
        "snr_db": 10.0 * math.log10(snr_linear) if snr_linear > 0.0 else float("-inf"),
        "azimuth_rad": direction.azimuth,
        "polar_rad": direction.polar,
    }
    if isinstance(source, NearField):
        meta["range_m"] = float(source.range_m)
    return CapacityMap("freq_hz", grid, values, meta)


_META_KEY_ORDER = (
    "axis",
    "geometry",
    "noise",
    "snr_db",
    "freq_hz",
    "azimuth_rad",
    "polar_rad",
    "range_m",
    "weights",
    "seed",
)


def write_capacity_csv(cmap: CapacityMap, path) -> None:
    """Serialize a capacity map: '# key=value' metadata lines, then CSV rows.

    Output is deterministic byte-for-byte for identical inputs: metadata
    keys are emitted in a fixed order and floats use repr (shortest
    round-trip form).
    """
    lines = []
    meta = {"axis": cmap.axis_name, **cmap.metadata}
    extra = [k for k in meta if k not in _META_KEY_ORDER]
    for key in list(_META_KEY_ORDER) + sorted(extra):
        if key in meta:
            lines.append(f"# {key}={_fmt(meta[key])}\n")
    lines.append("axis_value,capacity_bits\n")
    for a, v in zip(cmap.axis_values, cmap.values):
        lines.append(f"{a!r},{v!r}\n")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.writelines(lines)


def read_capacity_csv(path) -> CapacityMap:
    """Read a capacity map written by write_capacity_csv."""
    metadata: dict = {}
    axis = []
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    metadata[key.strip()] = val.strip()
                continue
            if line.startswith("axis_value"):
                continue
            a, _, v = line.partition(",")
            axis.append(float(a))
            values.append(float(v))
    axis_name = metadata.pop("axis", "axis")
    return CapacityMap(axis_name, np.asarray(axis), np.asarray(values), metadata)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
