"""
Closed-form weighted Fermat-Torricelli point of the octant triangle.

The octant triangle has vertices (1,0,0), (0,1,0), (0,0,1) and right-angle
sides. At an interior point A0 = (x1, x2, x3) the cosine law with
cos a_ij = 0 gives cos α_i0j = -cot a0i · cot a0j, so the weight-determined angles fix
u_i = cot a0i through u_i u_j = c_k, where

    c1 = (w2² + w3² - w1²) / (2 w2 w3)   (and cyclically),

and x_i = u_i / sqrt(1 + u_i²). That route is what `solve_octant` ships.
`solve_octant_paper` evaluates the published (ω, φ) formulas verbatim and is
kept for comparison only; `compare_omega_routes` reports how far apart the
two are.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from fermat_utils import NumericalDomain, WeightsNotFloating
from sphere_core import (
    GeodesicTriangle,
    SphericalCoords,
    UnitPoint,
    angle_between,
    geodesic_distance,
    octant_triangle,
    to_coords,
    unit_tangent,
    weighted_tangent_sum,
)

logger = logging.getLogger("sphere_fermat.closed_form")

INTERIOR_RESIDUAL_TOL = 1e-8
ANGLE_SUM_TOL = 1e-10


class Weights(BaseModel):
    model_config = ConfigDict(frozen=True)

    w1: float = Field(gt=0.0, allow_inf_nan=False)
    w2: float = Field(gt=0.0, allow_inf_nan=False)
    w3: float = Field(gt=0.0, allow_inf_nan=False)

    @classmethod
    def of(cls, values: Iterable[float]) -> "Weights":
        w1, w2, w3 = (float(v) for v in values)
        return cls(w1=w1, w2=w2, w3=w3)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def weight(self, i: int) -> float:
        return self.as_tuple()[i - 1]

    def scaled(self, factor: float) -> "Weights":
        return Weights.of(factor * w for w in self.as_tuple())

    def permuted(self, order: Tuple[int, int, int]) -> "Weights":
        return Weights.of(self.weight(i) for i in order)


class VertexAngles(BaseModel):
    """Angles at an interior A0 between the arcs toward A_i and A_j."""

    model_config = ConfigDict(frozen=True)

    a102: float = Field(gt=0.0, lt=math.pi)
    a203: float = Field(gt=0.0, lt=math.pi)
    a103: float = Field(gt=0.0, lt=math.pi)

    @model_validator(mode="after")
    def _check_sum(self):
        if abs(self.a102 + self.a203 + self.a103 - 2.0 * math.pi) > ANGLE_SUM_TOL:
            raise ValueError("angles around an interior point must sum to 2π")
        return self

    def between(self, i: int, j: int) -> float:
        key = tuple(sorted((i, j)))
        return {(1, 2): self.a102, (2, 3): self.a203, (1, 3): self.a103}[key]


class CaseLabel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["interior", "absorbed"]
    vertex: Optional[int] = Field(default=None, ge=1, le=3)

    @model_validator(mode="after")
    def _check_vertex(self):
        if (self.kind == "absorbed") != (self.vertex is not None):
            raise ValueError("an absorbed label needs exactly one vertex, an interior label none")
        return self

    @classmethod
    def interior(cls) -> "CaseLabel":
        return cls(kind="interior")

    @classmethod
    def absorbed_at(cls, vertex: int) -> "CaseLabel":
        return cls(kind="absorbed", vertex=vertex)


class FermatResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    point: UnitPoint
    coords: SphericalCoords
    case_label: CaseLabel
    weights: Weights
    distances: Tuple[float, float, float]
    stationarity_residual: float = Field(ge=0.0)

    @computed_field
    @property
    def objective(self) -> float:
        return float(sum(w * d for w, d in zip(self.weights.as_tuple(), self.distances)))

    @model_validator(mode="after")
    def _check_stationary(self):
        if self.case_label.kind == "interior" and not self.stationarity_residual < INTERIOR_RESIDUAL_TOL:
            raise ValueError(
                f"interior result is not stationary (residual {self.stationarity_residual:.3e})"
            )
        return self


def objective(tri: GeodesicTriangle, w: Weights, p: UnitPoint) -> float:
    """Σ w_i d(p, A_i)."""
    return float(sum(wi * geodesic_distance(p, v) for wi, v in zip(w.as_tuple(), tri.vertices())))


def absorbed_excess(tri: GeodesicTriangle, w: Weights, i: int) -> float:
    """max(0, ‖w_j U_{A_iA_j} + w_k U_{A_iA_k}‖ - w_i): zero when A_i is the minimizer."""
    j, k = [n for n in (1, 2, 3) if n != i]
    apex = tri.vertex(i).vector
    pull = weighted_tangent_sum(apex, tri.matrix()[[j - 1, k - 1]], np.array([w.weight(j), w.weight(k)]))
    return max(0.0, float(np.linalg.norm(pull)) - w.weight(i))


def build_result(tri: GeodesicTriangle, w: Weights, point: UnitPoint, label: CaseLabel) -> FermatResult:
    """Assemble a FermatResult for a solved point."""
    distances = tuple(geodesic_distance(point, v) for v in tri.vertices())
    if label.kind == "interior":
        residual = float(np.linalg.norm(weighted_tangent_sum(point.vector, tri.matrix(), w.as_array())))
    else:
        residual = absorbed_excess(tri, w, label.vertex)
    return FermatResult(
        point=point,
        coords=to_coords(point),
        case_label=label,
        weights=w,
        distances=distances,
        stationarity_residual=residual,
    )


def vertex_angles_from_weights(w: Weights) -> VertexAngles:
    """Angles at an interior minimizer, fixed by the weights alone."""
    w1, w2, w3 = w.as_tuple()
    ratios = {
        "a102": (w3 ** 2 - w1 ** 2 - w2 ** 2) / (2.0 * w1 * w2),
        "a203": (w1 ** 2 - w2 ** 2 - w3 ** 2) / (2.0 * w2 * w3),
        "a103": (w2 ** 2 - w1 ** 2 - w3 ** 2) / (2.0 * w1 * w3),
    }
    for name, ratio in ratios.items():
        # |ratio| == 1 is a degenerate weight triangle: the angle would be 0 or π
        if not -1.0 < ratio < 1.0:
            raise WeightsNotFloating(
                f"cos {name} = {ratio:.17g} is outside (-1, 1); the weights do not form a triangle"
            )
    return VertexAngles(**{name: math.acos(ratio) for name, ratio in ratios.items()})


def octant_cosines(w: Weights) -> Tuple[float, float, float]:
    """(c1, c2, c3); all positive exactly when the octant minimizer floats."""
    w1, w2, w3 = w.as_tuple()
    return (
        (w2 ** 2 + w3 ** 2 - w1 ** 2) / (2.0 * w2 * w3),
        (w1 ** 2 + w3 ** 2 - w2 ** 2) / (2.0 * w1 * w3),
        (w1 ** 2 + w2 ** 2 - w3 ** 2) / (2.0 * w1 * w2),
    )


def octant_floating(w: Weights) -> bool:
    """True when the octant minimizer lies inside the triangle."""
    return all(c > 0.0 for c in octant_cosines(w))


def _require_floating(w: Weights) -> Tuple[float, float, float]:
    c = octant_cosines(w)
    for i, ci in enumerate(c, start=1):
        if ci <= 0.0:
            raise WeightsNotFloating(
                f"w{i}² ≥ sum of the other two squared weights (c{i} = {ci:.17g}); "
                f"the minimizer is absorbed at A{i}"
            )
    return c


def octant_distance_cosines(w: Weights) -> np.ndarray:
    """cos a0i of the closed-form point, i.e. its Cartesian coordinates."""
    c1, c2, c3 = _require_floating(w)
    u = np.array([math.sqrt(c2 * c3 / c1), math.sqrt(c1 * c3 / c2), math.sqrt(c1 * c2 / c3)])
    x = u / np.sqrt(1.0 + u * u)
    # Σx_i² = 1 is an identity of the c_i; normalizing only removes rounding
    return x / np.linalg.norm(x)


def solve_octant(w: Weights) -> FermatResult:
    """Exact minimizer of the octant triangle; raises WeightsNotFloating if it sits on a vertex."""
    point = UnitPoint.from_vector(octant_distance_cosines(w))
    result = build_result(octant_triangle(), w, point, CaseLabel.interior())
    logger.debug(f"closed-form point for {w.as_tuple()}: {point.as_tuple()}")
    return result


def solve_octant_paper(w: Weights) -> SphericalCoords:
    """(ω, φ) exactly as the published formulas print them."""
    _require_floating(w)
    w1, w2, w3 = w.as_tuple()

    phi_radicand = (w1 ** 2 + w3 ** 2 - w2 ** 2) / (2.0 * w3 ** 2)
    if not 0.0 <= phi_radicand <= 1.0:
        raise NumericalDomain(f"φ radicand {phi_radicand:.17g} outside [0, 1]")

    angles = vertex_angles_from_weights(w)
    omega_radicand = (w1 ** 2 + w2 ** 2 - w3 ** 2) / (
        2.0 * w1 * w2 * math.sin(angles.a102) * math.sin(angles.a103)
    )
    if omega_radicand < 0.0:
        raise NumericalDomain(f"ω radicand {omega_radicand:.17g} is negative")
    if omega_radicand > 1.0:
        raise NumericalDomain(f"ω radicand {omega_radicand:.17g} exceeds 1; arccos undefined")

    return SphericalCoords(omega=math.acos(math.sqrt(omega_radicand)), phi=math.acos(math.sqrt(phi_radicand)))


def theorem2_phi_residual(w: Weights) -> float:
    """|cos²φ from the published formula - cos²φ of the closed-form point|"""
    x = octant_distance_cosines(w)
    w1, w2, w3 = w.as_tuple()
    cos2_phi_published = (w1 ** 2 + w3 ** 2 - w2 ** 2) / (2.0 * w3 ** 2)
    return abs(cos2_phi_published - x[0] ** 2 / (x[0] ** 2 + x[1] ** 2))


def sine_law_chain_residuals(w: Weights) -> Dict[str, float]:
    """
    Residuals of the sine-law relations behind the (ω, φ) derivation,
    evaluated at the closed-form point with measured vertex angles.

    Keys name the angle being expressed: `sin013` is sin α_013 = sin α_103 cos ω
    and so on; `fundamental1`/`fundamental2` are the squared-and-added forms.
    """
    result = solve_octant(w)
    angles = vertex_angles_from_weights(w)
    tri = octant_triangle()
    a0 = result.point
    a1, a2, a3 = tri.vertices()

    def measured(apex: UnitPoint, p: UnitPoint, q: UnitPoint) -> float:
        return angle_between(unit_tangent(apex, p).vector, unit_tangent(apex, q).vector)

    a013 = measured(a1, a0, a3)
    a120 = measured(a2, a1, a0)
    a130 = measured(a3, a1, a0)

    cos_w = math.cos(result.coords.omega)
    sin_a01 = math.sqrt(1.0 - (cos_w * math.cos(result.coords.phi)) ** 2)
    sin_a02 = math.sqrt(1.0 - (cos_w * math.sin(result.coords.phi)) ** 2)
    s102, s203, s103 = math.sin(angles.a102), math.sin(angles.a203), math.sin(angles.a103)

    return {
        "sin013": abs(math.sin(a013) - s103 * cos_w),
        "sin130": abs(math.sin(a130) - s103 * sin_a01),
        "cos013": abs(math.cos(a013) - s102 * sin_a02),
        "sin120": abs(math.sin(a120) - s102 * sin_a01),
        "cos120": abs(math.cos(a120) - s203 * cos_w),
        "cos130": abs(math.cos(a130) - s203 * sin_a02),
        "fundamental1": abs(s103 ** 2 * cos_w ** 2 + s102 ** 2 * sin_a02 ** 2 - 1.0),
        "fundamental2": abs(s203 ** 2 * cos_w ** 2 + s102 ** 2 * sin_a01 ** 2 - 1.0),
    }


class OmegaComparison(BaseModel):
    """One row of the ω-route adjudication report."""

    model_config = ConfigDict(frozen=True)

    w1: float
    w2: float
    w3: float
    phi_published: float
    phi_closed_form: float
    omega_closed_form: float
    omega_published: Optional[float] = None
    omega_oracle: Optional[float] = None
    omega_published_minus_closed_form: Optional[float] = None
    omega_published_minus_oracle: Optional[float] = None
    status: str = "ok"


def compare_omega_routes(w: Weights, oracle_point: Optional[UnitPoint] = None) -> OmegaComparison:
    """
    Compare the published ω with the closed-form ω (and the oracle's, when
    given). Never asserts agreement; a failing published formula is reported
    in `status`.
    """
    closed = solve_octant(w)
    w1, w2, w3 = w.as_tuple()
    phi_published = math.acos(math.sqrt((w1 ** 2 + w3 ** 2 - w2 ** 2) / (2.0 * w3 ** 2)))
    row = {
        "w1": w1,
        "w2": w2,
        "w3": w3,
        "phi_published": phi_published,
        "phi_closed_form": closed.coords.phi,
        "omega_closed_form": closed.coords.omega,
    }
    if oracle_point is not None:
        row["omega_oracle"] = to_coords(oracle_point).omega

    try:
        published = solve_octant_paper(w)
    except NumericalDomain as e:
        logger.warning(f"published ω formula undefined for {w.as_tuple()}: {e}")
        row["status"] = f"numerical_domain: {e}"
        return OmegaComparison(**row)

    row["omega_published"] = published.omega
    row["omega_published_minus_closed_form"] = published.omega - closed.coords.omega
    if oracle_point is not None:
        row["omega_published_minus_oracle"] = published.omega - row["omega_oracle"]
    return OmegaComparison(**row)


def write_omega_report(rows: List[OmegaComparison], path: str) -> str:
    """Write the comparison rows as CSV and return the path."""
    report_file = Path(path)
    report_file.parent.mkdir(exist_ok=True, parents=True)
    fieldnames = list(OmegaComparison.model_fields)
    with open(report_file, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=fieldnames, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if v is None else v) for k, v in row.model_dump().items()})
    logger.info(f"ω comparison report with {len(rows)} rows saved to {report_file}")
    return str(report_file)
