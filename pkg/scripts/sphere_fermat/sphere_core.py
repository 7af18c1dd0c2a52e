"""
Spherical-geometry primitives on the unit sphere.

Points are unit 3-vectors, angles are radians and arc lengths are central
angles. Every arccos argument is clamped to [-1, 1].
"""

import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fermat_utils import DegenerateDirection, DegenerateTriangle, OutOfRange


UNIT_TOL = 1e-12
TANGENT_TOL = 1e-10
ANTIPODAL_TOL = 1e-10
TWO_PI = 2.0 * math.pi

Vector3 = Tuple[float, float, float]


class UnitPoint(BaseModel):
    """A point on the unit sphere. Construction normalizes the coordinates."""

    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data):
        if not isinstance(data, dict):
            return data
        x, y, z = (float(data.get(k, 0.0)) for k in ("x", "y", "z"))
        norm = math.sqrt(x * x + y * y + z * z)
        if not math.isfinite(norm) or norm == 0.0:
            raise ValueError(f"cannot normalize ({x}, {y}, {z}) onto the unit sphere")
        return {"x": x / norm, "y": y / norm, "z": z / norm}

    @model_validator(mode="after")
    def _check_unit(self):
        if abs(self.x ** 2 + self.y ** 2 + self.z ** 2 - 1.0) > UNIT_TOL:
            raise ValueError("point is not on the unit sphere")
        return self

    @classmethod
    def from_vector(cls, v) -> "UnitPoint":
        return cls(x=float(v[0]), y=float(v[1]), z=float(v[2]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_tuple(self) -> Vector3:
        return (self.x, self.y, self.z)


class SphericalCoords(BaseModel):
    """Latitude omega and longitude phi of A0 = (cos ω cos φ, cos ω sin φ, sin ω)."""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(ge=-math.pi / 2, le=math.pi / 2)
    phi: float = Field(ge=0.0, lt=TWO_PI)


class TangentVector(BaseModel):
    """A vector in the tangent plane at `base`."""

    model_config = ConfigDict(frozen=True)

    base: UnitPoint
    direction: Vector3

    @model_validator(mode="after")
    def _check_tangent(self):
        if abs(float(np.dot(self.base.vector, self.vector))) > TANGENT_TOL:
            raise ValueError("direction is not tangent to the sphere at its base point")
        return self

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.direction)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


class GeodesicTriangle(BaseModel):
    """Three pairwise non-coincident, non-antipodal vertices."""

    model_config = ConfigDict(frozen=True)

    v1: UnitPoint
    v2: UnitPoint
    v3: UnitPoint

    @model_validator(mode="after")
    def _check_vertices(self):
        verts = self.vertices()
        for i, j in ((0, 1), (1, 2), (0, 2)):
            dot = float(np.dot(verts[i].vector, verts[j].vector))
            if abs(dot) >= 1.0 - ANTIPODAL_TOL:
                raise DegenerateTriangle(
                    f"vertices {i + 1} and {j + 1} are coincident or antipodal (dot={dot:.17g})"
                )
        return self

    @classmethod
    def from_vectors(cls, a, b, c) -> "GeodesicTriangle":
        return cls(v1=UnitPoint.from_vector(a), v2=UnitPoint.from_vector(b), v3=UnitPoint.from_vector(c))

    def vertices(self) -> Tuple[UnitPoint, UnitPoint, UnitPoint]:
        return (self.v1, self.v2, self.v3)

    def vertex(self, i: int) -> UnitPoint:
        """1-based vertex accessor."""
        return self.vertices()[i - 1]

    def matrix(self) -> np.ndarray:
        return np.array([v.as_tuple() for v in self.vertices()])

    def side(self, i: int, j: int) -> float:
        return geodesic_distance(self.vertex(i), self.vertex(j))

    def sides(self) -> Tuple[float, float, float]:
        """(a12, a23, a31)"""
        return (self.side(1, 2), self.side(2, 3), self.side(3, 1))

    def is_octant(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix(), np.eye(3), atol=tol, rtol=0.0))

    def permuted(self, order: Tuple[int, int, int]) -> "GeodesicTriangle":
        """Reorder vertices; `order` holds 1-based vertex indices."""
        verts = self.vertices()
        return GeodesicTriangle(v1=verts[order[0] - 1], v2=verts[order[1] - 1], v3=verts[order[2] - 1])


def octant_triangle() -> GeodesicTriangle:
    """Triangle with vertices on the three positive axes."""
    return GeodesicTriangle.from_vectors((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def geodesic_distance(p: UnitPoint, q: UnitPoint) -> float:
    """Arc length between two unit points, in radians."""
    return float(np.arccos(np.clip(np.dot(p.vector, q.vector), -1.0, 1.0)))


def unit_tangent(p: UnitPoint, q: UnitPoint) -> TangentVector:
    """Unit tangent at p of the minor geodesic arc from p toward q."""
    pv, qv = p.vector, q.vector
    dot = float(np.dot(pv, qv))
    if abs(dot) >= 1.0 - ANTIPODAL_TOL:
        raise DegenerateDirection(f"geodesic direction undefined (dot={dot:.17g})")
    v = qv - dot * pv
    # remove the rounding residue along p before normalizing
    v = v - float(np.dot(v, pv)) * pv
    direction = v / np.linalg.norm(v)
    return TangentVector(base=p, direction=tuple(float(c) for c in direction))


def point_on_geodesic(p: UnitPoint, q: UnitPoint, s: float) -> UnitPoint:
    """Point at arc distance s from p along the minor arc toward q."""
    d = geodesic_distance(p, q)
    if s < 0.0 or s > d + UNIT_TOL:
        raise OutOfRange(f"arc length {s:.17g} outside [0, {d:.17g}]")
    if s == 0.0:
        return p
    t = unit_tangent(p, q).vector
    return UnitPoint.from_vector(math.cos(s) * p.vector + math.sin(s) * t)


def spherical_cosine_side(b: float, c: float, alpha: float) -> float:
    """Side opposite the included angle alpha between sides b and c."""
    cos_a = math.cos(b) * math.cos(c) + math.sin(b) * math.sin(c) * math.cos(alpha)
    return float(np.arccos(np.clip(cos_a, -1.0, 1.0)))


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    return float(math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v))))


def vertex_angle(tri: GeodesicTriangle, i: int) -> float:
    """Interior angle of the triangle at vertex i (1-based)."""
    j, k = [n for n in (1, 2, 3) if n != i]
    apex = tri.vertex(i)
    return angle_between(unit_tangent(apex, tri.vertex(j)).vector, unit_tangent(apex, tri.vertex(k)).vector)


def sine_law_residual(tri: GeodesicTriangle) -> float:
    """Largest pairwise spread of sin(side)/sin(opposite angle)."""
    a12, a23, a31 = tri.sides()
    opposite = {1: a23, 2: a31, 3: a12}
    ratios = [math.sin(opposite[i]) / math.sin(vertex_angle(tri, i)) for i in (1, 2, 3)]
    return max(abs(ratios[i] - ratios[j]) for i, j in ((0, 1), (1, 2), (0, 2)))


def to_point(coords: SphericalCoords) -> UnitPoint:
    """Unit point of the given latitude and longitude."""
    cw = math.cos(coords.omega)
    return UnitPoint(x=cw * math.cos(coords.phi), y=cw * math.sin(coords.phi), z=math.sin(coords.omega))


def to_coords(p: UnitPoint) -> SphericalCoords:
    """Latitude in [-π/2, π/2] and longitude in [0, 2π)."""
    omega = math.asin(max(-1.0, min(1.0, p.z)))
    phi = math.atan2(p.y, p.x) % TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return SphericalCoords(omega=omega, phi=phi)


def fibonacci_lattice(n: int) -> np.ndarray:
    """n nearly uniform points on the sphere (deterministic, no random offset)."""
    offset = 2.0 / n
    increment = math.pi * (3.0 - math.sqrt(5.0))
    i = np.arange(n, dtype=float)
    y = (i * offset - 1.0) + offset / 2.0
    r = np.sqrt(np.clip(1.0 - y * y, 0.0, None))
    phi = ((i + 1.0) % n) * increment
    return np.column_stack((np.cos(phi) * r, y, np.sin(phi) * r))


def weighted_tangent_sum(p: np.ndarray, targets: np.ndarray, weights: np.ndarray,
                         min_sin: float = 1e-9) -> np.ndarray:
    """Σ w_i U_{p,target_i} for unit tangents at p; rows of `targets` are unit vectors."""
    dots = targets @ p
    tangents = targets - np.outer(dots, p)
    sines = np.linalg.norm(tangents, axis=1)
    if np.any(sines < min_sin):
        raise DegenerateDirection("point coincides with a target; tangent direction undefined")
    return (weights / sines) @ tangents
