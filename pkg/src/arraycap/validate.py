"""Built-in consistency checks comparing fast paths against independent oracles.

Each check recomputes a quantity two ways: the library path under test and
an oracle that shares no code with it (arbitrary-precision series for the
special functions, a dense linear solve for the whitened channel, the
closed-form diffuse covariance for the quadrature).  The CLI ``validate``
subcommand runs all checks and reports one line per check.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from . import noisefield
from .capacity import narrowband_capacity, whiten, whitened_channel, wiener_mmse
from .geometry import ArrayGeometry, build_linear, pairwise_distances
from .wavefield import Direction, steering_far_field

__all__ = ["CheckResult", "run_validation_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _series_sinc(x: float) -> float:
    """sin(x)/x at 50 significant digits."""
    with mpmath.workdps(50):
        if x == 0.0:
            return 1.0
        return float(mpmath.sin(x) / mpmath.mpf(x))


def _series_j0(x: float) -> float:
    """Order-zero Bessel J at 50 significant digits."""
    with mpmath.workdps(50):
        return float(mpmath.besselj(0, x))


def check_sinc_oracle() -> CheckResult:
    xs = np.concatenate([[0.0], np.linspace(1e-6, 50.0, 401)])
    worst = 0.0
    for x in xs:
        got = float(noisefield.sinc_coherence(x))
        want = _series_sinc(float(x))
        worst = max(worst, abs(got - want))
    passed = worst <= 1e-10
    return CheckResult("sinc-oracle", passed, f"max abs deviation {worst:.3e} (limit 1e-10)")


def check_bessel_j0_oracle() -> CheckResult:
    xs = np.concatenate([[0.0], np.linspace(1e-6, 50.0, 401)])
    worst = 0.0
    for x in xs:
        got = float(noisefield.bessel_j0_coherence(x))
        want = _series_j0(float(x))
        worst = max(worst, abs(got - want))
    passed = worst <= 1e-10
    return CheckResult("bessel-j0-oracle", passed, f"max abs deviation {worst:.3e} (limit 1e-10)")


def random_instance(rng: np.random.Generator):
    """One randomized (geometry, steering, covariance) triple for cross checks."""
    m = int(rng.integers(2, 9))
    kind = int(rng.integers(0, 3))
    # The cylindrical model is a valid covariance only for coplanar arrays.
    positions = _random_positions(rng, m, planar=(kind == 1))
    geometry = ArrayGeometry(positions)
    f = float(rng.uniform(100.0, 8000.0))
    direction = Direction(float(rng.uniform(0.0, 2.0 * np.pi)), float(rng.uniform(0.0, np.pi)))
    eps = float(rng.uniform(0.001, 0.1))
    power = float(rng.uniform(0.5, 2.0))
    dist = pairwise_distances(geometry)
    if kind == 0:
        cov = noisefield.covariance_spherical_diffuse(dist, f, power, eps)
    elif kind == 1:
        cov = noisefield.covariance_cylindrical_diffuse(dist, f, power, eps)
    else:
        density = _random_density(rng)
        cov = noisefield.covariance_from_angular_density(
            geometry, f, density, quadrature_resolution=(32, 16)
        )
        cov = noisefield.mix_incoherent(cov, eps)
    d = steering_far_field(geometry, f, direction)
    return geometry, d, cov


def _random_positions(rng: np.random.Generator, m: int, planar: bool = False) -> np.ndarray:
    while True:
        pos = rng.uniform(-0.1, 0.1, size=(m, 3))
        if planar:
            pos[:, 2] = 0.0
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[np.eye(m, dtype=bool)] = np.inf
        if np.min(dist) > 0.005:
            return pos


def _random_density(rng: np.random.Generator) -> noisefield.AngularDensity:
    az = np.linspace(0.0, 2.0 * np.pi, 9, endpoint=False)
    pol = np.linspace(0.0, np.pi, 5)
    vals = rng.uniform(0.0, 1.0, size=(az.size, pol.size))
    return noisefield.AngularDensity(az, pol, vals)


def check_whitened_vs_direct(instances: int = 60, seed: int = 20240601) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        _, d, cov = random_instance(rng)
        w = whiten(cov)
        q_white = float(np.sum(np.abs(whitened_channel(w, d)) ** 2))
        q_solve = float(np.real(d.entries.conj() @ np.linalg.solve(cov.matrix, d.entries)))
        worst = max(worst, abs(q_white - q_solve) / abs(q_solve))
    passed = worst <= 1e-9
    return CheckResult(
        "whitened-vs-direct",
        passed,
        f"{instances} randomized instances, max relative deviation {worst:.3e} (limit 1e-9)",
    )


def check_quadrature_vs_closed_form() -> CheckResult:
    geometry = build_linear(3, 0.03)
    f = 1000.0
    power = 1.0
    density = noisefield.AngularDensity.isotropic(power)
    quad = noisefield.covariance_from_angular_density(
        geometry, f, density, quadrature_resolution=(128, 64)
    )
    closed = noisefield.covariance_spherical_diffuse(pairwise_distances(geometry), f, power)
    worst = float(np.max(np.abs(quad.matrix - closed.matrix)))
    passed = worst <= 1e-3 * power
    return CheckResult(
        "quadrature-vs-closed-form",
        passed,
        f"max entrywise deviation {worst:.3e} (limit {1e-3 * power:.1e})",
    )


def check_mmse_identity(instances: int = 40, seed: int = 20240602) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        _, d, cov = random_instance(rng)
        snr = float(rng.uniform(0.1, 10.0))
        source_power = snr * cov.noise_power
        cap = narrowband_capacity(d, cov, snr).value
        mmse = wiener_mmse(d, cov, source_power)
        want = source_power * 2.0 ** (-cap)
        worst = max(worst, abs(mmse - want) / want)
    passed = worst <= 1e-12
    return CheckResult(
        "mmse-identity",
        passed,
        f"{instances} randomized instances, max relative deviation {worst:.3e} (limit 1e-12)",
    )


def run_validation_checks() -> list[CheckResult]:
    """Run every built-in oracle check; order is fixed."""
    return [
        check_sinc_oracle(),
        check_bessel_j0_oracle(),
        check_whitened_vs_direct(),
        check_quadrature_vs_closed_form(),
        check_mmse_identity(),
    ]
