import numpy as np
import pytest

from arraycap import ArrayGeometry


def random_geometry(rng, m, scale=0.1, planar=False, min_dist=0.005):
    """Random array of m microphones in a cube of half-width scale."""
    while True:
        pos = rng.uniform(-scale, scale, size=(m, 3))
        if planar:
            pos[:, 2] = 0.0
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dist[np.eye(m, dtype=bool)] = np.inf
        if np.min(dist) > min_dist:
            return ArrayGeometry(pos)


def rotation_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
