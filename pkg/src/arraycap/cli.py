"""Command-line front end.

Subcommands::

    arraycap azimuth-scan   --config cfg.yaml [--snr-db X] [--freq-hz F] [--out PATH] [--svg]
    arraycap frequency-scan --config cfg.yaml [...]
    arraycap broadband      --config cfg.yaml [...]
    arraycap optimize       --config cfg.yaml [--seed N] [--out STEM]
    arraycap validate

Exit codes: 0 success, 1 computation/check failure, 2 configuration
validation error, 3 I/O error.  Angles in the config are radians,
frequencies Hz, SNR in dB.  Output files are written to a temporary file
and renamed into place, so a failing run never leaves a partial file.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np
import yaml

from .capacity import (
    CapacityMap,
    SpectralWeights,
    azimuth_scan,
    broadband_capacity,
    frequency_scan,
    write_capacity_csv,
)
from .errors import ArrayCapError, ConfigError, TableParseError
from .geometry import (
    ArrayGeometry,
    build_circular,
    build_linear,
    build_rectangular,
    load_geometry,
    save_geometry,
)
from .noisefield import NoiseModel, load_angular_density
from .optimize import (
    DesignConstraints,
    DesignObjective,
    optimize_geometry,
    write_report_trace,
)
from .svg import line_svg, polar_svg
from .validate import run_validation_checks
from .wavefield import Direction, FarField, NearField, SourceSpec

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_SPEED_OF_SOUND = 343.0
DEFAULT_AZIMUTH_POINTS = 360
DEFAULT_FREQ_GRID = {"start": 100.0, "stop": 8000.0, "count": 100, "scale": "log"}


@dataclass
class RunConfig:
    """Fully validated run parameters for one subcommand invocation."""

    geometry: ArrayGeometry
    noise_model: NoiseModel
    source: SourceSpec
    snr_db: float
    speed_of_sound: float
    frequency_hz: float
    azimuth_grid: np.ndarray
    frequency_grid: np.ndarray
    weights: SpectralWeights | None
    weights_renormalized: bool
    seed: int
    output: str
    optimize: dict = field(default_factory=dict)

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    if args.command == "validate":
        return _cmd_validate()
    try:
        config = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    handler = {
        "azimuth-scan": cmd_azimuth_scan,
        "frequency-scan": cmd_frequency_scan,
        "broadband": cmd_broadband,
        "optimize": cmd_optimize,
    }[args.command]
    try:
        return handler(config, svg=getattr(args, "svg", False))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArrayCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILURE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arraycap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")
    for name, needs_svg in (
        ("azimuth-scan", True),
        ("frequency-scan", True),
        ("broadband", True),
        ("optimize", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--snr-db", type=float, default=None, help="override config snr_db")
        p.add_argument("--freq-hz", type=float, default=None, help="override config frequency_hz")
        p.add_argument("--out", default=None, help="override config output path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        if needs_svg:
            p.add_argument("--svg", action="store_true", help="also write an SVG plot")
    sub.add_parser("validate", help="run the built-in oracle checks")
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.snr_db is not None:
        out["snr_db"] = args.snr_db
    if args.freq_hz is not None:
        out["frequency_hz"] = args.freq_hz
    if args.out is not None:
        out["output"] = args.out
    if args.seed is not None:
        out["seed"] = args.seed
    return out


# ---------------------------------------------------------------------------
# configuration loading


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    """Parse and fully validate a YAML run configuration.

    Raises ConfigError naming the offending field; raises OSError when the
    file cannot be read.
    """
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level of the config must be a mapping")
    doc = dict(doc)
    doc.update(overrides or {})

    geometry = _parse_geometry(doc.get("geometry"))
    noise_model = _parse_noise(doc.get("noise"))
    source = _parse_source(doc.get("source"))
    snr_db = _as_float(doc.get("snr_db", 6.0), "snr_db")
    if not math.isfinite(snr_db):
        raise ConfigError("snr_db must be finite")
    c = _as_float(doc.get("speed_of_sound", DEFAULT_SPEED_OF_SOUND), "speed_of_sound")
    if not (c > 0.0):
        raise ConfigError("speed_of_sound must be > 0")
    frequency_hz = _as_float(doc.get("frequency_hz", 1000.0), "frequency_hz")
    if frequency_hz < 0.0:
        raise ConfigError("frequency_hz must be >= 0")
    azimuth_grid = _parse_azimuth_grid(doc.get("azimuth_grid"))
    frequency_grid = _parse_frequency_grid(doc.get("frequency_grid"))
    weights, renorm = _parse_weights(doc.get("weights_file"), frequency_grid)
    seed = int(doc.get("seed", 0))
    output = str(doc.get("output", "arraycap_out.csv"))
    opt = doc.get("optimize", {})
    if opt is None:
        opt = {}
    if not isinstance(opt, dict):
        raise ConfigError("optimize section must be a mapping")
    return RunConfig(
        geometry=geometry,
        noise_model=noise_model,
        source=source,
        snr_db=snr_db,
        speed_of_sound=c,
        frequency_hz=frequency_hz,
        azimuth_grid=azimuth_grid,
        frequency_grid=frequency_grid,
        weights=weights,
        weights_renormalized=renorm,
        seed=seed,
        output=output,
        optimize=opt,
    )


def _as_float(value, fieldname: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{fieldname} must be a number, got {value!r}") from exc


def _parse_geometry(section) -> ArrayGeometry:
    if not isinstance(section, dict):
        raise ConfigError("geometry section is required and must be a mapping")
    has_builder = "builder" in section and section["builder"] is not None
    has_file = "file" in section and section["file"] is not None
    if has_builder == has_file:
        raise ConfigError("geometry must specify exactly one of 'builder' or 'file'")
    if has_file:
        try:
            return load_geometry(section["file"])
        except TableParseError as exc:
            raise ConfigError(f"geometry.file: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"geometry.file: cannot read {section['file']}: {exc}") from exc
    builder = section["builder"]
    if not isinstance(builder, dict) or "type" not in builder:
        raise ConfigError("geometry.builder must be a mapping with a 'type' field")
    kind = builder["type"]
    try:
        if kind == "linear":
            return build_linear(int(builder["count"]), float(builder["spacing"]))
        if kind == "rectangular":
            return build_rectangular(
                int(builder["rows"]), int(builder["cols"]), float(builder["spacing"])
            )
        if kind == "circular":
            return build_circular(int(builder["count"]), float(builder["spacing"]))
    except KeyError as exc:
        raise ConfigError(f"geometry.builder is missing field {exc}") from exc
    except (TypeError, ValueError, ArrayCapError) as exc:
        raise ConfigError(f"geometry.builder: {exc}") from exc
    raise ConfigError(f"geometry.builder.type must be linear, rectangular or circular, got {kind!r}")


def _parse_noise(section) -> NoiseModel:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("noise section must be a mapping")
    model = str(section.get("model", "spherical")).replace("-", "_")
    power = _as_float(section.get("power", 1.0), "noise.power")
    fraction = _as_float(section.get("incoherent_fraction", 0.01), "noise.incoherent_fraction")
    try:
        if model == "incoherent":
            return NoiseModel.incoherent(power)
        if model == "spherical":
            return NoiseModel.spherical(power, fraction)
        if model == "cylindrical":
            return NoiseModel.cylindrical(power, fraction)
        if model == "angular_density":
            density_file = section.get("density_file")
            if not density_file:
                raise ConfigError("noise.density_file is required for the angular_density model")
            try:
                density = load_angular_density(density_file)
            except TableParseError as exc:
                raise ConfigError(f"noise.density_file: {exc}") from exc
            except OSError as exc:
                raise ConfigError(f"noise.density_file: cannot read {density_file}: {exc}") from exc
            quad = section.get("quadrature", (64, 32))
            if not (isinstance(quad, (list, tuple)) and len(quad) == 2):
                raise ConfigError("noise.quadrature must be a [n_azimuth, n_polar] pair")
            return NoiseModel.angular_density(density, fraction, (int(quad[0]), int(quad[1])))
    except ArrayCapError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"noise: {exc}") from exc
    raise ConfigError(
        f"noise.model must be incoherent, spherical, cylindrical or angular_density, got {model!r}"
    )


def _parse_source(section) -> SourceSpec:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError("source section must be a mapping")
    azimuth = _as_float(section.get("azimuth_rad", 0.0), "source.azimuth_rad")
    polar = _as_float(section.get("polar_rad", math.pi / 2.0), "source.polar_rad")
    try:
        direction = Direction(azimuth, polar)
    except ArrayCapError as exc:
        raise ConfigError(f"source: {exc}") from exc
    range_m = section.get("range_m")
    if range_m is None:
        return FarField(direction)
    try:
        return NearField(_as_float(range_m, "source.range_m"), direction)
    except ArrayCapError as exc:
        raise ConfigError(f"source.range_m: {exc}") from exc


def _parse_azimuth_grid(section) -> np.ndarray:
    if section is None:
        section = {"count": DEFAULT_AZIMUTH_POINTS}
    if isinstance(section, (list, tuple)):
        grid = np.asarray([_as_float(v, "azimuth_grid") for v in section], dtype=float)
        if grid.size < 1:
            raise ConfigError("azimuth_grid list must be non-empty")
        return grid
    if isinstance(section, dict):
        count = int(section.get("count", DEFAULT_AZIMUTH_POINTS))
        if count < 1:
            raise ConfigError("azimuth_grid.count must be >= 1")
        start = _as_float(section.get("start", 0.0), "azimuth_grid.start")
        stop = _as_float(section.get("stop_exclusive", start + 2.0 * math.pi), "azimuth_grid.stop_exclusive")
        return start + (stop - start) * np.arange(count) / count
    raise ConfigError("azimuth_grid must be a list of angles or a {start, stop_exclusive, count} mapping")


def _parse_frequency_grid(section) -> np.ndarray:
    if section is None:
        section = dict(DEFAULT_FREQ_GRID)
    if isinstance(section, (list, tuple)):
        grid = np.asarray([_as_float(v, "frequency_grid") for v in section], dtype=float)
        if grid.size < 1:
            raise ConfigError("frequency_grid list must be non-empty")
        if np.any(grid < 0.0):
            raise ConfigError("frequency_grid values must be >= 0")
        return grid
    if isinstance(section, dict):
        count = int(section.get("count", DEFAULT_FREQ_GRID["count"]))
        if count < 1:
            raise ConfigError("frequency_grid.count must be >= 1")
        start = _as_float(section.get("start", DEFAULT_FREQ_GRID["start"]), "frequency_grid.start")
        stop = _as_float(section.get("stop", DEFAULT_FREQ_GRID["stop"]), "frequency_grid.stop")
        scale = str(section.get("scale", DEFAULT_FREQ_GRID["scale"]))
        if count == 1:
            return np.asarray([start], dtype=float)
        if scale == "log":
            if start <= 0.0 or stop <= 0.0:
                raise ConfigError("frequency_grid with log scale requires positive start and stop")
            return np.geomspace(start, stop, count)
        if scale == "linear":
            return np.linspace(start, stop, count)
        raise ConfigError(f"frequency_grid.scale must be 'log' or 'linear', got {scale!r}")
    raise ConfigError("frequency_grid must be a list or a {start, stop, count, scale} mapping")


def _parse_weights(path, frequency_grid: np.ndarray):
    """Load a freq_hz,weight CSV, renormalizing when the sum is off."""
    if path is None:
        return None, False
    import csv

    freqs = []
    weights = []
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["freq_hz", "weight"]:
                raise ConfigError(f"weights_file {path}: expected header freq_hz,weight")
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise ConfigError(f"weights_file {path}: line {lineno}: expected 2 fields")
                try:
                    freqs.append(float(row[0]))
                    weights.append(float(row[1]))
                except ValueError as exc:
                    raise ConfigError(f"weights_file {path}: line {lineno}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"weights_file: cannot read {path}: {exc}") from exc
    if not freqs:
        raise ConfigError(f"weights_file {path}: no data rows")
    if any(w < 0.0 for w in weights):
        raise ConfigError(f"weights_file {path}: weights must be >= 0")
    total = math.fsum(weights)
    renormalized = abs(total - 1.0) > 1e-12
    try:
        spectral = SpectralWeights.normalized(np.asarray(freqs), np.asarray(weights))
    except ArrayCapError as exc:
        raise ConfigError(f"weights_file {path}: {exc}") from exc
    return spectral, renormalized


# ---------------------------------------------------------------------------
# subcommands


def cmd_azimuth_scan(config: RunConfig, svg: bool = False) -> int:
    """Write a capacity-vs-azimuth CSV for a far-field source ring."""
    if isinstance(config.source, NearField):
        raise ConfigError("source.range_m must be null for azimuth-scan (far-field sweep)")
    cmap = azimuth_scan(
        config.geometry,
        config.noise_model,
        config.frequency_hz,
        config.source.direction.polar,
        config.azimuth_grid,
        config.snr_linear,
        config.speed_of_sound,
    )
    cmap.metadata["snr_db"] = config.snr_db
    _emit_map(cmap, config.output)
    if svg:
        _emit_svg(config.output, polar_svg(cmap.axis_values, cmap.values, "capacity vs azimuth"))
    return EXIT_OK


def cmd_frequency_scan(config: RunConfig, svg: bool = False) -> int:
    """Write a capacity-vs-frequency CSV for a fixed source."""
    cmap = frequency_scan(
        config.geometry,
        config.noise_model,
        config.source,
        config.frequency_grid,
        config.snr_linear,
        config.speed_of_sound,
    )
    cmap.metadata["snr_db"] = config.snr_db
    _emit_map(cmap, config.output)
    if svg:
        _emit_svg(
            config.output,
            line_svg(cmap.axis_values, cmap.values, "frequency / Hz", "capacity / bits", "capacity vs frequency", log_x=True),
        )
    return EXIT_OK


def cmd_broadband(config: RunConfig, svg: bool = False) -> int:
    """Write a broadband-capacity-vs-azimuth CSV (one row per azimuth)."""
    if isinstance(config.source, NearField):
        raise ConfigError("source.range_m must be null for broadband (far-field sweep)")
    weights = config.weights
    if weights is None:
        weights = SpectralWeights.uniform(config.frequency_grid)
    elif config.weights_renormalized:
        print("warning: weights_file did not sum to 1; renormalized", file=sys.stderr)
    polar = config.source.direction.polar
    values = np.empty(config.azimuth_grid.size)
    for i, az in enumerate(config.azimuth_grid):
        source = FarField(Direction(float(az), polar))
        values[i] = broadband_capacity(
            config.geometry,
            config.noise_model,
            source,
            weights,
            config.snr_linear,
            config.speed_of_sound,
        )
    meta = {
        "geometry": config.geometry.name,
        "noise": config.noise_model.id,
        "snr_db": config.snr_db,
        "polar_rad": polar,
        "weights": "file" if config.weights is not None else "uniform",
    }
    cmap = CapacityMap("azimuth_rad", config.azimuth_grid, values, meta)
    _emit_map(cmap, config.output)
    if svg:
        _emit_svg(config.output, polar_svg(cmap.axis_values, cmap.values, "broadband capacity vs azimuth"))
    return EXIT_OK


def cmd_optimize(config: RunConfig, svg: bool = False) -> int:
    """Run the geometry optimizer; write a trace CSV and the final geometry."""
    opt = config.optimize
    if not opt:
        raise ConfigError("optimize section is required for the optimize subcommand")
    box = opt.get("box")
    if not isinstance(box, dict) or any(k not in box for k in ("x", "y", "z")):
        raise ConfigError("optimize.box must be a mapping with x, y, z [lo, hi] pairs")
    try:
        lo = [float(box[k][0]) for k in ("x", "y", "z")]
        hi = [float(box[k][1]) for k in ("x", "y", "z")]
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"optimize.box: {exc}") from exc
    try:
        constraints = DesignConstraints(
            np.asarray(lo),
            np.asarray(hi),
            float(opt.get("min_spacing", 0.01)),
            frozenset(int(i) for i in opt.get("fixed", []) or []),
        )
    except ArrayCapError as exc:
        raise ConfigError(f"optimize: {exc}") from exc
    budget = int(opt.get("budget", 500))
    if budget < 1:
        raise ConfigError("optimize.budget must be >= 1")
    aggregate = str(opt.get("objective", "mean"))
    weights = config.weights if config.weights is not None else SpectralWeights.one_hot(config.frequency_hz)
    try:
        objective = DesignObjective(
            aggregate,
            config.azimuth_grid,
            weights,
            config.noise_model,
            config.snr_linear,
            config.source.direction.polar,
        )
    except ArrayCapError as exc:
        raise ConfigError(f"optimize.objective: {exc}") from exc
    initial_step = opt.get("initial_step")
    report = optimize_geometry(
        config.geometry,
        constraints,
        objective,
        budget,
        config.seed,
        config.speed_of_sound,
        None if initial_step is None else float(initial_step),
    )
    stem = config.output
    for suffix in (".csv", ".yaml", ".yml"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    trace_path = f"{stem}_trace.csv"
    geom_path = f"{stem}_geometry.yaml"
    _emit_with(lambda p: write_report_trace(report, p), trace_path)
    _emit_with(lambda p: save_geometry(report.final_geometry, p), geom_path)
    print(
        f"optimize: {report.evaluation_count} evaluations, "
        f"objective {report.trace[0]!r} -> {report.trace[-1]!r} bits"
    )
    return EXIT_OK


def _cmd_validate() -> int:
    """Run the built-in oracle checks; exit 0 only if every check passes."""
    results = run_validation_checks()
    all_passed = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.detail}")
        all_passed &= res.passed
    return EXIT_OK if all_passed else EXIT_CHECK_FAILURE


def cmd_validate() -> int:
    return _cmd_validate()


def _emit_map(cmap: CapacityMap, path: str) -> None:
    _emit_with(lambda p: write_capacity_csv(cmap, p), path)


def _emit_with(writer, path: str) -> None:
    """Run a path-taking writer against a temp file, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_svg(csv_path: str, svg_text: str) -> None:
    base, _ = os.path.splitext(csv_path)
    _emit_with(lambda p: _write_text(p, svg_text), base + ".svg")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
