"""Information-theoretic evaluation and optimization of microphone arrays.

The quality of a microphone array is scored by the channel capacity of the
acoustic path from a source to the microphones: a quantity fixed by the
array geometry, the spatial-noise field and the source position alone,
independent of any beamforming algorithm.  The package provides

* array geometry builders and file I/O        (:mod:`arraycap.geometry`)
* far/near-field steering vectors, scattering (:mod:`arraycap.wavefield`)
* diffuse / custom noise covariances          (:mod:`arraycap.noisefield`)
* whitening, capacity, scans, MMSE            (:mod:`arraycap.capacity`)
* placement optimization                      (:mod:`arraycap.optimize`)
* a CSV/YAML command-line front end           (:mod:`arraycap.cli`)
"""

from .capacity import (
    CapacityMap,
    CapacityResult,
    SpectralWeights,
    Whitener,
    azimuth_scan,
    broadband_capacity,
    expected_capacity_under_position_uncertainty,
    frequency_scan,
    narrowband_capacity,
    read_capacity_csv,
    whiten,
    whitened_channel,
    wiener_mmse,
    write_capacity_csv,
)
from .errors import (
    ArrayCapError,
    ConfigError,
    DegenerateCovarianceError,
    GridRangeError,
    InvalidArgumentError,
    SingularCovarianceError,
    TableParseError,
)
from .geometry import (
    ArrayGeometry,
    DistanceMatrix,
    build_circular,
    build_linear,
    build_rectangular,
    load_geometry,
    pairwise_distances,
    save_geometry,
)
from .noisefield import (
    AngularDensity,
    InterfererSpec,
    NoiseCovariance,
    NoiseModel,
    add_interference,
    covariance_cylindrical_diffuse,
    covariance_from_angular_density,
    covariance_incoherent,
    covariance_spherical_diffuse,
    load_angular_density,
    mix_incoherent,
    save_angular_density,
)
from .optimize import (
    DesignConstraints,
    DesignObjective,
    OptimizationReport,
    brute_force_best_spacing,
    evaluate_objective,
    optimize_geometry,
)
from .wavefield import (
    Direction,
    FarField,
    NearField,
    ScatteringTable,
    SteeringVector,
    far_field_delays,
    load_scattering_table,
    save_scattering_table,
    steering_far_field,
    steering_near_field,
    steering_vector,
    total_steering,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayCapError",
    "ArrayGeometry",
    "AngularDensity",
    "CapacityMap",
    "CapacityResult",
    "ConfigError",
    "DegenerateCovarianceError",
    "DesignConstraints",
    "DesignObjective",
    "Direction",
    "DistanceMatrix",
    "FarField",
    "GridRangeError",
    "InterfererSpec",
    "InvalidArgumentError",
    "NearField",
    "NoiseCovariance",
    "NoiseModel",
    "OptimizationReport",
    "ScatteringTable",
    "SingularCovarianceError",
    "SpectralWeights",
    "SteeringVector",
    "TableParseError",
    "Whitener",
    "add_interference",
    "azimuth_scan",
    "broadband_capacity",
    "brute_force_best_spacing",
    "build_circular",
    "build_linear",
    "build_rectangular",
    "covariance_cylindrical_diffuse",
    "covariance_from_angular_density",
    "covariance_incoherent",
    "covariance_spherical_diffuse",
    "evaluate_objective",
    "expected_capacity_under_position_uncertainty",
    "far_field_delays",
    "frequency_scan",
    "load_angular_density",
    "load_geometry",
    "load_scattering_table",
    "mix_incoherent",
    "narrowband_capacity",
    "optimize_geometry",
    "pairwise_distances",
    "read_capacity_csv",
    "save_angular_density",
    "save_geometry",
    "save_scattering_table",
    "steering_far_field",
    "steering_near_field",
    "steering_vector",
    "total_steering",
    "whiten",
    "whitened_channel",
    "wiener_mmse",
    "write_capacity_csv",
]
