import numpy as np
import pytest

from arraycap import (
    ArrayGeometry,
    DistanceMatrix,
    InvalidArgumentError,
    TableParseError,
    build_circular,
    build_linear,
    build_rectangular,
    load_geometry,
    pairwise_distances,
    save_geometry,
)

from conftest import random_geometry, rotation_z


def test_linear_positions():
    geom = build_linear(3, 0.03)
    assert np.allclose(geom.positions[:, 0], [-0.03, 0.0, 0.03], atol=1e-15)
    assert np.all(geom.positions[:, 1:] == 0.0)


def test_linear_single_mic_at_origin():
    geom = build_linear(1, 0.03)
    assert geom.mic_count == 1
    assert np.allclose(geom.positions, 0.0, atol=1e-15)


def test_linear_distance_endpoints():
    d = pairwise_distances(build_linear(3, 0.03))
    assert d.entries[0, 2] == pytest.approx(0.06, abs=1e-15)


def test_rectangular_grid():
    geom = build_rectangular(2, 3, 0.03)
    assert geom.mic_count == 6
    d = pairwise_distances(geom).entries
    off = d[~np.eye(6, dtype=bool)]
    assert off.min() == pytest.approx(0.03, abs=1e-15)


def test_rectangular_single_row_matches_linear():
    a = build_rectangular(1, 3, 0.03).positions
    b = build_linear(3, 0.03).positions
    assert np.allclose(a, b, atol=1e-15)


def test_rectangular_square_diagonal():
    d = pairwise_distances(build_rectangular(2, 2, 0.03)).entries
    assert d.max() == pytest.approx(0.03 * np.sqrt(2.0), abs=1e-15)


def test_circular_hexagon_radius_equals_spacing():
    geom = build_circular(6, 0.03)
    radii = np.linalg.norm(geom.positions, axis=1)
    assert np.allclose(radii, 0.03, atol=1e-12)


def test_circular_square_radius():
    geom = build_circular(4, 0.03)
    radii = np.linalg.norm(geom.positions, axis=1)
    assert np.allclose(radii, 0.03 / np.sqrt(2.0), atol=1e-12)


def test_circular_adjacent_chords_equal_spacing():
    # recompute chords from the emitted positions
    geom = build_circular(6, 0.03)
    pos = geom.positions
    chords = np.linalg.norm(pos - np.roll(pos, -1, axis=0), axis=1)
    assert np.max(np.abs(chords - 0.03)) < 1e-12


def test_pairwise_distances_linear_offdiag():
    d = pairwise_distances(build_linear(3, 0.03)).entries
    off = sorted(d[np.triu_indices(3, 1)])
    assert off == pytest.approx([0.03, 0.03, 0.06], abs=1e-15)


def test_pairwise_distances_symmetric(rng):
    geom = random_geometry(rng, 5)
    d = pairwise_distances(geom).entries
    assert np.array_equal(d, d.T)


def test_circular_max_distance_is_diameter():
    geom = build_circular(6, 0.03)
    d = pairwise_distances(geom).entries
    # brute-force max over pairs
    pos = geom.positions
    brute = max(
        np.linalg.norm(pos[i] - pos[j]) for i in range(6) for j in range(6) if i != j
    )
    radius = 0.03 / (2.0 * np.sin(np.pi / 6.0))
    assert d.max() == pytest.approx(brute, abs=0.0)
    assert d.max() == pytest.approx(2.0 * radius, abs=1e-12)


@pytest.mark.parametrize(
    "builder",
    [
        lambda: build_linear(4, 0.05),
        lambda: build_rectangular(3, 4, 0.02),
        lambda: build_circular(7, 0.03),
    ],
)
def test_builders_centered(builder):
    geom = builder()
    assert np.max(np.abs(geom.positions.mean(axis=0))) < 1e-12


def test_distances_rotation_invariant(rng):
    geom = random_geometry(rng, 6)
    rot = rotation_z(rng.uniform(0.0, 2.0 * np.pi))
    rotated = ArrayGeometry(geom.positions @ rot.T)
    d0 = pairwise_distances(geom).entries
    d1 = pairwise_distances(rotated).entries
    assert np.max(np.abs(d0 - d1)) < 1e-12


def test_invalid_arguments():
    with pytest.raises(InvalidArgumentError):
        build_linear(0, 0.03)
    with pytest.raises(InvalidArgumentError):
        build_linear(3, 0.0)
    with pytest.raises(InvalidArgumentError):
        build_rectangular(2, 3, -0.01)
    with pytest.raises(InvalidArgumentError):
        build_circular(1, 0.03)


def test_coincident_microphones_rejected():
    with pytest.raises(InvalidArgumentError):
        ArrayGeometry(np.zeros((2, 3)))


def test_nonfinite_coordinates_rejected():
    pos = np.zeros((2, 3))
    pos[1] = [np.nan, 0.0, 0.0]
    with pytest.raises(InvalidArgumentError):
        ArrayGeometry(pos)


def test_distance_matrix_invariants_enforced():
    bad = np.array([[0.0, 1.0], [2.0, 0.0]])  # asymmetric
    with pytest.raises(InvalidArgumentError):
        DistanceMatrix(bad)
    bad = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])  # triangle
    with pytest.raises(InvalidArgumentError):
        DistanceMatrix(bad)


def test_geometry_file_round_trip(tmp_path):
    geom = build_circular(5, 0.04)
    path = tmp_path / "geom.yaml"
    save_geometry(geom, path)
    loaded = load_geometry(path)
    assert loaded.labels == geom.labels
    assert np.array_equal(loaded.positions, geom.positions)


def test_geometry_file_missing_field(tmp_path):
    path = tmp_path / "geom.yaml"
    path.write_text("microphones:\n- {label: a, x_m: 0.0, y_m: 0.0}\n")
    with pytest.raises(TableParseError, match="z_m"):
        load_geometry(path)
