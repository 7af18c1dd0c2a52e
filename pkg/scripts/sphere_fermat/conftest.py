import math

import numpy as np
import pytest

from closed_form import Weights, octant_cosines
from sphere_core import GeodesicTriangle, octant_triangle


@pytest.fixture
def octant():
    return octant_triangle()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_unit(rng) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_floating_weights(rng, count: int, low: float = 1.0, high: float = 10.0,
                            min_cosine: float = 0.0):
    """Weight triples uniform in [low, high]³ whose octant minimizer floats."""
    found = []
    while len(found) < count:
        w = Weights.of(rng.uniform(low, high, size=3))
        if min(octant_cosines(w)) > min_cosine:
            found.append(w)
    return found


def random_triangle(rng, spread: float = math.pi / 4, min_side: float = 0.1) -> GeodesicTriangle:
    """Vertices within `spread` of a random centre, so every side is at most 2·spread."""
    while True:
        centre = random_unit(rng)
        vertices = []
        for _ in range(3):
            direction = random_unit(rng)
            direction -= float(np.dot(direction, centre)) * centre
            direction /= np.linalg.norm(direction)
            angle = rng.uniform(0.0, spread)
            vertices.append(math.cos(angle) * centre + math.sin(angle) * direction)
        tri = GeodesicTriangle.from_vectors(*vertices)
        if min(tri.sides()) > min_side:
            return tri


def tangent_basis(p: np.ndarray):
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(p)))] = 1.0
    e1 = axis - float(np.dot(axis, p)) * p
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(p, e1)
