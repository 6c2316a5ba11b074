"""Derivative-free search over microphone placements.

The objective is the spectrally averaged capacity of a far-field source,
aggregated over an azimuth grid (mean or worst case).  The search is a
pattern search: propose single-microphone moves along the coordinate axes,
accept only strict improvements, halve the step after a full round with no
acceptance, and restart from a random feasible layout when the step
collapses while evaluation budget remains.  Everything is deterministic
for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import LOG2, SpectralWeights, _covariance_at, _whiten_at, _whitened_norm_sq
from .errors import InvalidArgumentError
from .geometry import ArrayGeometry, build_linear
from .noisefield import NoiseModel
from .wavefield import Direction, steering_far_field

__all__ = [
    "DesignConstraints",
    "DesignObjective",
    "OptimizationReport",
    "evaluate_objective",
    "optimize_geometry",
    "brute_force_best_spacing",
    "write_report_trace",
]

STEP_COLLAPSE = 1e-4  # meters; a pattern-search leg stops below this step


@dataclass(frozen=True, eq=False)
class DesignConstraints:
    """Feasible region for movable microphones.

    ``box_lo``/``box_hi`` bound each movable microphone coordinate; a
    dimension with zero extent is frozen at that value.  ``min_spacing``
    applies to every microphone pair.  Indices in ``fixed`` never move.
    """

    box_lo: np.ndarray
    box_hi: np.ndarray
    min_spacing: float
    fixed: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        lo = np.asarray(self.box_lo, dtype=float)
        hi = np.asarray(self.box_hi, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise InvalidArgumentError("box bounds must be 3-vectors")
        if np.any(hi < lo):
            raise InvalidArgumentError("box upper bounds must not be below lower bounds")
        if not (float(self.min_spacing) > 0.0):
            raise InvalidArgumentError(f"min_spacing must be > 0, got {self.min_spacing}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)
        object.__setattr__(self, "fixed", frozenset(int(i) for i in self.fixed))

    @property
    def free_dims(self) -> np.ndarray:
        return np.flatnonzero(self.box_hi > self.box_lo)

    def feasible(self, positions: np.ndarray) -> bool:
        """Movable microphones inside the box, all pairs at least min_spacing apart."""
        m = positions.shape[0]
        movable = [k for k in range(m) if k not in self.fixed]
        if movable:
            p = positions[movable]
            if np.any(p < self.box_lo[None, :] - 1e-15) or np.any(p > self.box_hi[None, :] + 1e-15):
                return False
        if m > 1:
            diff = positions[:, None, :] - positions[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            dist[np.eye(m, dtype=bool)] = np.inf
            if np.min(dist) < self.min_spacing:
                return False
        return True


@dataclass(frozen=True, eq=False)
class DesignObjective:
    """Capacity objective aggregated over an azimuth grid.

    ``aggregate`` is ``mean`` (average capacity over the grid) or ``min``
    (worst direction).  Each grid angle is scored by the weighted average
    of narrowband capacities over the weight grid's frequencies.
    """

    aggregate: str
    azimuth_grid: np.ndarray
    weights: SpectralWeights
    noise_model: NoiseModel
    snr_linear: float
    polar: float = math.pi / 2.0

    def __post_init__(self):
        if self.aggregate not in ("mean", "min"):
            raise InvalidArgumentError(f"aggregate must be 'mean' or 'min', got {self.aggregate!r}")
        grid = np.asarray(self.azimuth_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise InvalidArgumentError("azimuth grid must be a non-empty 1-D array")
        if self.snr_linear < 0.0:
            raise InvalidArgumentError(f"snr_linear must be >= 0, got {self.snr_linear}")
        grid.setflags(write=False)
        object.__setattr__(self, "azimuth_grid", grid)


def evaluate_objective(
    geometry: ArrayGeometry, objective: DesignObjective, c: float = 343.0
) -> float:
    """Aggregate broadband capacity of ``geometry`` under the objective."""
    grid = objective.azimuth_grid
    directions = [Direction(float(az), objective.polar) for az in grid]
    per_angle: list[list[float]] = [[] for _ in directions]
    for f, wgt in zip(objective.weights.frequencies, objective.weights.weights):
        cov = _covariance_at(objective.noise_model, geometry, float(f), c)
        wh = _whiten_at(cov, float(f))
        scale = objective.snr_linear * cov.noise_power
        for i, direction in enumerate(directions):
            d = steering_far_field(geometry, float(f), direction, c)
            q = _whitened_norm_sq(wh, d.entries)
            per_angle[i].append(wgt * math.log1p(scale * q) / LOG2)
    values = [math.fsum(terms) for terms in per_angle]
    if objective.aggregate == "mean":
        return math.fsum(values) / len(values)
    return min(values)


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    """Outcome of one optimization run.

    ``trace`` starts with the initial objective and appends every accepted
    improvement of the best-so-far value, so it is strictly increasing
    after the first entry.
    """

    initial_geometry: ArrayGeometry
    final_geometry: ArrayGeometry
    trace: tuple[float, ...]
    evaluation_count: int
    seed: int


def optimize_geometry(
    initial: ArrayGeometry,
    constraints: DesignConstraints,
    objective: DesignObjective,
    budget: int,
    seed: int,
    c: float = 343.0,
    initial_step: float | None = None,
) -> OptimizationReport:
    """Pattern search with random restarts over microphone positions.

    Per round, single-microphone moves of +-step along each free axis are
    proposed in seeded random order; the first strictly improving feasible
    move is taken.  A full round without acceptance halves the step; when
    the step drops below 1e-4 m the search restarts from a random feasible
    layout, until ``budget`` objective evaluations have been spent.  The
    reported geometry is the best ever evaluated, never worse than the
    initial one.
    """
    if budget < 1:
        raise InvalidArgumentError(f"budget must be >= 1, got {budget}")
    pos0 = np.array(initial.positions, dtype=float)
    if not constraints.feasible(pos0):
        raise InvalidArgumentError("initial geometry violates the design constraints")
    free = constraints.free_dims
    movable = [k for k in range(initial.mic_count) if k not in constraints.fixed]
    if initial_step is None:
        extents = constraints.box_hi[free] - constraints.box_lo[free] if free.size else np.array([0.0])
        initial_step = max(float(np.max(extents)) / 4.0, STEP_COLLAPSE)
    rng = np.random.default_rng(seed)

    evals = 0

    def score(positions: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        return evaluate_objective(ArrayGeometry(positions, labels=initial.labels), objective, c)

    best_pos = pos0.copy()
    best_val = score(pos0)
    trace = [best_val]
    proposals = [(k, int(dim), sgn) for k in movable for dim in free for sgn in (1.0, -1.0)]

    start_pos, start_val = pos0, best_val
    while evals < budget and proposals:
        cur, cur_val = start_pos.copy(), start_val
        step = float(initial_step)
        while evals < budget and step >= STEP_COLLAPSE:
            order = rng.permutation(len(proposals))
            accepted = False
            for idx in order:
                if evals >= budget:
                    break
                k, dim, sgn = proposals[idx]
                cand = cur.copy()
                cand[k, dim] += sgn * step
                if not constraints.feasible(cand):
                    continue
                val = score(cand)
                if val > cur_val:
                    cur, cur_val = cand, val
                    accepted = True
                    if val > best_val:
                        best_pos, best_val = cand.copy(), val
                        trace.append(val)
                    break
            if not accepted and evals < budget:
                step *= 0.5
        if evals >= budget:
            break
        start_pos = _random_feasible(rng, pos0, constraints, movable, free)
        start_val = score(start_pos)
        if start_val > best_val:
            best_pos, best_val = start_pos.copy(), start_val
            trace.append(start_val)

    final = ArrayGeometry(best_pos, labels=initial.labels, name=f"{initial.name}:optimized")
    return OptimizationReport(initial, final, tuple(trace), evals, int(seed))


def _random_feasible(rng, base: np.ndarray, constraints: DesignConstraints, movable, free) -> np.ndarray:
    """Sample movable microphones uniformly in the box; keep the base on failure."""
    for _ in range(200):
        cand = base.copy()
        for k in movable:
            for dim in free:
                cand[k, dim] = rng.uniform(constraints.box_lo[dim], constraints.box_hi[dim])
        if constraints.feasible(cand):
            return cand
    return base.copy()


def brute_force_best_spacing(
    spacings, objective: DesignObjective, c: float = 343.0
) -> tuple[float, float]:
    """Exhaustive search over two-microphone line spacings.

    Evaluates the objective for a centered two-microphone array on the
    x-axis at every grid spacing and returns (best spacing, best value);
    ties break toward the smaller spacing.
    """
    grid = np.asarray(spacings, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise InvalidArgumentError("spacing grid must be a non-empty 1-D array")
    best_s = None
    best_val = -math.inf
    for s in np.sort(grid):
        val = evaluate_objective(build_linear(2, float(s)), objective, c)
        if val > best_val:
            best_s, best_val = float(s), val
    return best_s, best_val


def write_report_trace(report: OptimizationReport, path) -> None:
    """Write the accepted-objective trace as CSV with run metadata comments."""
    lines = [
        f"# seed={report.seed}\n",
        f"# evaluations={report.evaluation_count}\n",
        "accepted_index,objective_bits\n",
    ]
    for i, val in enumerate(report.trace):
        lines.append(f"{i},{val!r}\n")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.writelines(lines)
