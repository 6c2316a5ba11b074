"""Microphone-array geometries and their pairwise-distance structure.

Positions are Cartesian, in meters, with the array origin at the coordinate
origin.  The builders in this module recenter their output so the centroid
of the microphone positions is the zero vector; geometries loaded from a
file keep whatever origin the file uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .errors import InvalidArgumentError, TableParseError

__all__ = [
    "ArrayGeometry",
    "DistanceMatrix",
    "build_linear",
    "build_rectangular",
    "build_circular",
    "pairwise_distances",
    "load_geometry",
    "save_geometry",
]

_CENTROID_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Ordered set of microphone positions.

    Parameters
    ----------
    positions : (M, 3) array_like
        Microphone coordinates in meters.
    labels : list of str, optional
        Per-microphone identifiers; defaults to ``m0 .. m{M-1}``.
    name : str, optional
        Short human-readable identifier used in output metadata.
    """

    positions: np.ndarray
    labels: tuple[str, ...] | None = None
    name: str = ""

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1 and pos.size == 3:
            pos = pos[None, :]
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise InvalidArgumentError(
                f"positions must be an (M, 3) array with M >= 1, got shape {pos.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise InvalidArgumentError("all microphone coordinates must be finite")
        m = pos.shape[0]
        if m > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            off = dist[~np.eye(m, dtype=bool)]
            if np.any(off <= 0.0):
                raise InvalidArgumentError("coincident microphones: all pairwise distances must be > 0")
        labels = self.labels
        if labels is None:
            labels = tuple(f"m{k}" for k in range(m))
        else:
            labels = tuple(str(s) for s in labels)
            if len(labels) != m:
                raise InvalidArgumentError(
                    f"got {len(labels)} labels for {m} microphones"
                )
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "labels", labels)
        if not self.name:
            object.__setattr__(self, "name", f"array(M={m})")

    @property
    def mic_count(self) -> int:
        return self.positions.shape[0]

    @property
    def extent(self) -> float:
        """Largest microphone distance from the coordinate origin."""
        return float(np.max(np.linalg.norm(self.positions, axis=1)))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric matrix of pairwise microphone distances in meters."""

    entries: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.entries, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidArgumentError(f"distance matrix must be square, got shape {d.shape}")
        m = d.shape[0]
        if not np.array_equal(d, d.T):
            raise InvalidArgumentError("distance matrix must be symmetric")
        if np.any(np.diag(d) != 0.0):
            raise InvalidArgumentError("distance matrix diagonal must be zero")
        if m > 1 and np.any(d[~np.eye(m, dtype=bool)] <= 0.0):
            raise InvalidArgumentError("off-diagonal distances must be strictly positive")
        # Triangle inequality, with slack for floating-point roundoff.
        tol = 1e-9 * max(1.0, float(d.max(initial=0.0)))
        for k in range(m):
            if np.any(d > d[:, k, None] + d[None, k, :] + tol):
                raise InvalidArgumentError("distance matrix violates the triangle inequality")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "entries", d)

    @property
    def mic_count(self) -> int:
        return self.entries.shape[0]


def build_linear(count: int, spacing: float) -> ArrayGeometry:
    """Uniform line of microphones along the x-axis, centroid at the origin."""
    _check_count_spacing(count, spacing, min_count=1)
    x = spacing * np.arange(count, dtype=float)
    pos = np.zeros((count, 3))
    pos[:, 0] = x - x.mean()
    return ArrayGeometry(pos, name=f"linear(count={count},spacing={spacing!r})")


def build_rectangular(rows: int, cols: int, spacing: float) -> ArrayGeometry:
    """Grid in the x-y plane: columns step along x, rows along y."""
    if rows < 1 or cols < 1:
        raise InvalidArgumentError(f"rows and cols must be >= 1, got {rows}x{cols}")
    if not (spacing > 0.0):
        raise InvalidArgumentError(f"spacing must be > 0, got {spacing}")
    xs = spacing * np.arange(cols, dtype=float)
    ys = spacing * np.arange(rows, dtype=float)
    pos = np.zeros((rows * cols, 3))
    for r in range(rows):
        for c in range(cols):
            pos[r * cols + c, 0] = xs[c]
            pos[r * cols + c, 1] = ys[r]
    pos[:, :2] -= pos[:, :2].mean(axis=0)
    return ArrayGeometry(pos, name=f"rectangular(rows={rows},cols={cols},spacing={spacing!r})")


def build_circular(count: int, adjacent_spacing: float) -> ArrayGeometry:
    """Equally spaced ring in the x-y plane, first microphone on the +x axis.

    The radius is chosen so the chord between adjacent microphones equals
    ``adjacent_spacing``: r = s / (2 sin(pi/M)).
    """
    _check_count_spacing(count, adjacent_spacing, min_count=2)
    radius = adjacent_spacing / (2.0 * np.sin(np.pi / count))
    angles = 2.0 * np.pi * np.arange(count, dtype=float) / count
    pos = np.zeros((count, 3))
    pos[:, 0] = radius * np.cos(angles)
    pos[:, 1] = radius * np.sin(angles)
    pos[:, :2] -= pos[:, :2].mean(axis=0)
    return ArrayGeometry(
        pos, name=f"circular(count={count},spacing={adjacent_spacing!r})"
    )


def pairwise_distances(geometry: ArrayGeometry) -> DistanceMatrix:
    """Euclidean distances between every microphone pair."""
    pos = geometry.positions
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def _check_count_spacing(count: int, spacing: float, min_count: int) -> None:
    if count < min_count:
        raise InvalidArgumentError(f"count must be >= {min_count}, got {count}")
    if not (spacing > 0.0):
        raise InvalidArgumentError(f"spacing must be > 0, got {spacing}")


def load_geometry(path) -> ArrayGeometry:
    """Read an array geometry from a YAML microphone list.

    The document must contain a ``microphones`` list whose records carry the
    fields ``label``, ``x_m``, ``y_m``, ``z_m``.
    """
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise TableParseError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "microphones" not in doc:
        raise TableParseError(f"{path}: missing top-level 'microphones' list")
    records = doc["microphones"]
    if not isinstance(records, list) or not records:
        raise TableParseError(f"{path}: 'microphones' must be a non-empty list")
    positions = []
    labels = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise TableParseError(f"{path}: microphone record {i} is not a mapping")
        missing = [k for k in ("label", "x_m", "y_m", "z_m") if k not in rec]
        if missing:
            raise TableParseError(
                f"{path}: microphone record {i} is missing fields {missing}"
            )
        labels.append(str(rec["label"]))
        try:
            positions.append([float(rec["x_m"]), float(rec["y_m"]), float(rec["z_m"])])
        except (TypeError, ValueError) as exc:
            raise TableParseError(
                f"{path}: microphone record {i} has a non-numeric coordinate"
            ) from exc
    name = str(doc.get("name", "")) or f"file(M={len(records)})"
    return ArrayGeometry(np.asarray(positions), labels=tuple(labels), name=name)


def save_geometry(geometry: ArrayGeometry, path) -> None:
    """Write a geometry as a YAML microphone list (inverse of load_geometry)."""
    records = [
        {
            "label": geometry.labels[k],
            "x_m": float(geometry.positions[k, 0]),
            "y_m": float(geometry.positions[k, 1]),
            "z_m": float(geometry.positions[k, 2]),
        }
        for k in range(geometry.mic_count)
    ]
    doc = {"name": geometry.name, "microphones": records}
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(doc, handle, sort_keys=False)
