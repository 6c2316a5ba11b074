"""Steering vectors for plane waves and point sources, plus scattered-field tables.

Conventions
-----------
A direction is (azimuth, polar) in radians: azimuth measured in the x-y
plane from +x, polar measured from the +z axis, so polar = pi/2 is the
horizontal plane.  The unit vector pointing from the array toward the
source is u = (cos az sin pol, sin az sin pol, cos pol).

Far-field delays use tau_k = -(p_k . u) / c, so a microphone closer to the
source receives the wavefront earlier (negative delay).  A microphone at
the origin always has tau = 0.  Near-field delays are referenced to the
wavefront arrival time at the origin, tau_k = (r_k - r) / c, with amplitude
alpha_k = r / r_k (unit gain at the origin distance).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridRangeError, InvalidArgumentError, TableParseError
from .geometry import ArrayGeometry

__all__ = [
    "Direction",
    "FarField",
    "NearField",
    "SourceSpec",
    "SteeringVector",
    "ScatteringTable",
    "far_field_delays",
    "steering_far_field",
    "steering_near_field",
    "steering_vector",
    "total_steering",
    "load_scattering_table",
    "save_scattering_table",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Direction:
    """Source direction: azimuth in [0, 2*pi), polar in [0, pi].

    The azimuth is normalized modulo 2*pi on construction; the polar angle
    must already be in range.
    """

    azimuth: float
    polar: float

    def __post_init__(self):
        az = float(self.azimuth)
        pol = float(self.polar)
        if not (np.isfinite(az) and np.isfinite(pol)):
            raise InvalidArgumentError("direction angles must be finite")
        if not (0.0 <= pol <= np.pi):
            raise InvalidArgumentError(f"polar angle must be in [0, pi], got {pol}")
        az = az % TWO_PI
        if az == TWO_PI:  # guards -1e-17 % 2pi rounding up
            az = 0.0
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "polar", pol)

    def unit_vector(self) -> np.ndarray:
        sp = np.sin(self.polar)
        return np.array(
            [np.cos(self.azimuth) * sp, np.sin(self.azimuth) * sp, np.cos(self.polar)]
        )

    def rotated(self, azimuth_offset: float) -> "Direction":
        return Direction(self.azimuth + azimuth_offset, self.polar)


@dataclass(frozen=True)
class FarField:
    """Plane-wave source: only the direction matters."""

    direction: Direction


@dataclass(frozen=True)
class NearField:
    """Point source at range ``range_m`` along ``direction`` from the origin.

    The range must exceed the largest microphone distance from the origin;
    this is checked against the geometry when the steering vector is built.
    """

    range_m: float
    direction: Direction

    def __post_init__(self):
        if not (float(self.range_m) > 0.0):
            raise InvalidArgumentError(f"near-field range must be > 0, got {self.range_m}")


SourceSpec = FarField | NearField


def _source_direction(source: SourceSpec) -> Direction:
    return source.direction


@dataclass(frozen=True, eq=False)
class SteeringVector:
    """Complex per-microphone response to a source at one frequency."""

    entries: np.ndarray
    frequency: float
    source: SourceSpec

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 1 or e.size < 1:
            raise InvalidArgumentError(f"steering entries must be a 1-D vector, got shape {e.shape}")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "frequency", float(self.frequency))

    @property
    def mic_count(self) -> int:
        return self.entries.size


def far_field_delays(
    geometry: ArrayGeometry, direction: Direction, c: float = 343.0
) -> np.ndarray:
    """Per-microphone plane-wave delays in seconds, tau_k = -(p_k . u) / c."""
    if not (c > 0.0):
        raise InvalidArgumentError(f"speed of sound must be > 0, got {c}")
    u = direction.unit_vector()
    return -(geometry.positions @ u) / c


def steering_far_field(
    geometry: ArrayGeometry, f: float, direction: Direction, c: float = 343.0
) -> SteeringVector:
    """Unit-modulus plane-wave steering vector, d_k = exp(-j 2 pi f tau_k)."""
    tau = far_field_delays(geometry, direction, c)
    entries = np.exp(-1j * TWO_PI * f * tau)
    return SteeringVector(entries, f, FarField(direction))


def steering_near_field(
    geometry: ArrayGeometry,
    f: float,
    range_m: float,
    direction: Direction,
    c: float = 343.0,
) -> SteeringVector:
    """Point-source steering vector with spherical-spreading attenuation.

    With source point s = r u and per-microphone distance r_k = |s - p_k|,
    the entries are (r / r_k) * exp(-j 2 pi f (r_k - r) / c).
    """
    if not (c > 0.0):
        raise InvalidArgumentError(f"speed of sound must be > 0, got {c}")
    source = NearField(range_m, direction)
    r = float(range_m)
    extent = geometry.extent
    if r <= extent:
        raise InvalidArgumentError(
            f"near-field range {r} m does not exceed the array extent {extent} m"
        )
    s = r * direction.unit_vector()
    rk = np.linalg.norm(s[None, :] - geometry.positions, axis=1)
    alpha = r / rk
    tau = (rk - r) / c
    entries = alpha * np.exp(-1j * TWO_PI * f * tau)
    return SteeringVector(entries, f, source)


def steering_vector(
    geometry: ArrayGeometry, f: float, source: SourceSpec, c: float = 343.0
) -> SteeringVector:
    """Dispatch to the far-field or near-field steering construction."""
    if isinstance(source, FarField):
        return steering_far_field(geometry, f, source.direction, c)
    if isinstance(source, NearField):
        return steering_near_field(geometry, f, source.range_m, source.direction, c)
    raise InvalidArgumentError(f"unsupported source spec: {source!r}")


@dataclass(frozen=True, eq=False)
class ScatteringTable:
    """Scattered-field samples on a (frequency x azimuth x polar) grid.

    ``samples`` has shape (F, A, P, M): one complex M-vector per grid node.
    All three grids must be strictly ascending.  Queries are interpolated
    multilinearly inside the grid hull; no extrapolation is performed.
    """

    freq_grid: np.ndarray
    azimuth_grid: np.ndarray
    polar_grid: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        fg = np.asarray(self.freq_grid, dtype=float)
        ag = np.asarray(self.azimuth_grid, dtype=float)
        pg = np.asarray(self.polar_grid, dtype=float)
        smp = np.asarray(self.samples, dtype=complex)
        for label, g in (("frequency", fg), ("azimuth", ag), ("polar", pg)):
            if g.ndim != 1 or g.size < 1:
                raise InvalidArgumentError(f"{label} grid must be a non-empty 1-D array")
            if not np.all(np.isfinite(g)):
                raise InvalidArgumentError(f"{label} grid contains non-finite values")
            if g.size > 1 and not np.all(np.diff(g) > 0.0):
                raise InvalidArgumentError(f"{label} grid must be strictly ascending")
        if smp.ndim != 4 or smp.shape[:3] != (fg.size, ag.size, pg.size):
            raise InvalidArgumentError(
                f"samples shape {smp.shape} does not match grids "
                f"({fg.size}, {ag.size}, {pg.size}, M)"
            )
        for arr in (fg, ag, pg, smp):
            arr.setflags(write=False)
        object.__setattr__(self, "freq_grid", fg)
        object.__setattr__(self, "azimuth_grid", ag)
        object.__setattr__(self, "polar_grid", pg)
        object.__setattr__(self, "samples", smp)

    @property
    def mic_count(self) -> int:
        return self.samples.shape[3]

    def interpolate(self, f: float, direction: Direction) -> np.ndarray:
        """Multilinear interpolation of the scattered field at (f, azimuth, polar)."""
        fi, fw = _bracket(self.freq_grid, float(f), "frequency")
        ai, aw = _bracket(self.azimuth_grid, direction.azimuth, "azimuth")
        pi_, pw = _bracket(self.polar_grid, direction.polar, "polar")
        out = np.zeros(self.mic_count, dtype=complex)
        for i, wf in zip(fi, fw):
            for j, wa in zip(ai, aw):
                for k, wp in zip(pi_, pw):
                    w = wf * wa * wp
                    if w != 0.0:
                        out += w * self.samples[i, j, k]
        return out


def _bracket(grid: np.ndarray, x: float, label: str):
    """Indices and weights of the two grid nodes bracketing x (one node if exact)."""
    lo, hi = float(grid[0]), float(grid[-1])
    if grid.size == 1:
        if abs(x - lo) > 1e-9 * max(1.0, abs(lo)):
            raise GridRangeError(
                f"{label} {x} is outside the single-node grid at {lo} (no extrapolation)"
            )
        return (0,), (1.0,)
    if x < lo or x > hi:
        raise GridRangeError(
            f"{label} {x} is outside the grid hull [{lo}, {hi}] (no extrapolation)"
        )
    idx = int(np.searchsorted(grid, x, side="right") - 1)
    if idx >= grid.size - 1:
        return (grid.size - 1,), (1.0,)
    x0, x1 = float(grid[idx]), float(grid[idx + 1])
    t = (x - x0) / (x1 - x0)
    return (idx, idx + 1), (1.0 - t, t)


def total_steering(incident: SteeringVector, table: ScatteringTable) -> SteeringVector:
    """Sum of the incident steering vector and the interpolated scattered field.

    The result is generally not unit-modulus.  Raises GridRangeError when the
    incident (frequency, direction) falls outside the table's grid hull.
    """
    if table.mic_count != incident.mic_count:
        raise InvalidArgumentError(
            f"table holds {table.mic_count} microphones, steering vector {incident.mic_count}"
        )
    scattered = table.interpolate(incident.frequency, _source_direction(incident.source))
    return SteeringVector(incident.entries + scattered, incident.frequency, incident.source)


_SCATTERING_HEADER = ["freq_hz", "azimuth_rad", "polar_rad", "mic_index", "re", "im"]


def load_scattering_table(path) -> ScatteringTable:
    """Read a scattering table from CSV.

    Columns: ``freq_hz, azimuth_rad, polar_rad, mic_index, re, im`` with a
    mandatory header.  Rows may appear in any order but must form a complete
    Cartesian grid with exactly one row per (frequency, azimuth, polar, mic)
    node.
    """
    nodes: dict[tuple[float, float, float, int], complex] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _SCATTERING_HEADER:
            raise TableParseError(
                f"{path}: line 1: expected header {','.join(_SCATTERING_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise TableParseError(f"{path}: line {lineno}: expected 6 fields, got {len(row)}")
            try:
                f = float(row[0])
                az = float(row[1])
                pol = float(row[2])
                mic = int(row[3])
                val = complex(float(row[4]), float(row[5]))
            except ValueError as exc:
                raise TableParseError(f"{path}: line {lineno}: {exc}") from exc
            key = (f, az, pol, mic)
            if key in nodes:
                raise TableParseError(
                    f"{path}: line {lineno}: duplicate node (f={f}, az={az}, pol={pol}, mic={mic})"
                )
            nodes[key] = val
    if not nodes:
        raise TableParseError(f"{path}: no data rows")
    freqs = sorted({k[0] for k in nodes})
    azimuths = sorted({k[1] for k in nodes})
    polars = sorted({k[2] for k in nodes})
    mics = sorted({k[3] for k in nodes})
    if mics != list(range(len(mics))):
        raise TableParseError(f"{path}: mic_index values must be 0..M-1, got {mics}")
    expected = len(freqs) * len(azimuths) * len(polars) * len(mics)
    if len(nodes) != expected:
        for f in freqs:
            for az in azimuths:
                for pol in polars:
                    for mic in mics:
                        if (f, az, pol, mic) not in nodes:
                            raise TableParseError(
                                f"{path}: incomplete grid, missing node "
                                f"(f={f}, az={az}, pol={pol}, mic={mic})"
                            )
    fi = {f: i for i, f in enumerate(freqs)}
    ai = {az: i for i, az in enumerate(azimuths)}
    pi_ = {pol: i for i, pol in enumerate(polars)}
    samples = np.empty((len(freqs), len(azimuths), len(polars), len(mics)), dtype=complex)
    for (f, az, pol, mic), val in nodes.items():
        samples[fi[f], ai[az], pi_[pol], mic] = val
    return ScatteringTable(np.asarray(freqs), np.asarray(azimuths), np.asarray(polars), samples)


def save_scattering_table(table: ScatteringTable, path) -> None:
    """Write a scattering table as CSV (inverse of load_scattering_table)."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_SCATTERING_HEADER)
        for i, f in enumerate(table.freq_grid):
            for j, az in enumerate(table.azimuth_grid):
                for k, pol in enumerate(table.polar_grid):
                    for m in range(table.mic_count):
                        val = table.samples[i, j, k, m]
                        writer.writerow([repr(float(f)), repr(float(az)), repr(float(pol)),
                                         m, repr(val.real), repr(val.imag)])
