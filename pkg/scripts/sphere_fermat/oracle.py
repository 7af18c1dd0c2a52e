"""
Numeric minimizer of Σ w_i d(p, A_i) over the unit sphere.

A deterministic Fibonacci-lattice scan picks a seed, Riemannian descent with
Armijo backtracking polishes it, and the three vertices are always compared
directly because the objective is not differentiable there.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from closed_form import CaseLabel, FermatResult, Weights, build_result
from fermat_utils import NoConvergence
from sphere_core import (
    GeodesicTriangle,
    TangentVector,
    UnitPoint,
    fibonacci_lattice,
    weighted_tangent_sum,
)

logger = logging.getLogger("sphere_fermat.oracle")

ARMIJO_C = 1e-4
BACKTRACK = 0.5
MIN_STEP = 1e-16
VERTEX_SIN_FLOOR = 1e-9
VERTEX_NUDGE = 1e-3
OBJECTIVE_NOISE = 16.0
ROUNDING_REGION = 1e-6
GRID_COLUMNS = ("omega", "phi", "objective")


class OracleOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    scan_points: int = Field(default=20000, ge=12)
    max_iters: int = Field(default=500, gt=0)
    step_init: float = Field(default=0.5, gt=0.0)
    # interior results must certify a residual below 1e-8
    tol_grad: float = Field(default=1e-10, gt=0.0, le=1e-9)
    vertex_snap: float = Field(default=1e-6, gt=0.0)
    use_newton: bool = True


@dataclass
class DescentOutcome:
    point: np.ndarray
    objective: float
    residual: float
    iterations: int
    converged: bool
    stop_reason: str


def objective_values(points: np.ndarray, vertices: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Objective at each row of `points` (an N×3 array of unit vectors)."""
    return np.arccos(np.clip(points @ vertices.T, -1.0, 1.0)) @ weights


def _objective_at(p: np.ndarray, vertices: np.ndarray, weights: np.ndarray) -> float:
    return float(np.arccos(np.clip(vertices @ p, -1.0, 1.0)) @ weights)


def gradient(tri: GeodesicTriangle, w: Weights, p: UnitPoint) -> TangentVector:
    """Riemannian gradient Σ w_i grad d(p, A_i), with grad d = -(A - cos d·p)/sin d."""
    pv = p.vector
    g = -weighted_tangent_sum(pv, tri.matrix(), w.as_array(), min_sin=VERTEX_SIN_FLOOR)
    # near a vertex the 1/sin d factor amplifies the rounding residue along p
    g = g - float(np.dot(g, pv)) * pv
    return TangentVector(base=p, direction=tuple(float(c) for c in g))


def _tangent_basis(p: np.ndarray):
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(p)))] = 1.0
    e1 = axis - float(np.dot(axis, p)) * p
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(p, e1)


def _newton_direction(p: np.ndarray, g: np.ndarray, units: np.ndarray, cots: np.ndarray,
                      weights: np.ndarray) -> Optional[np.ndarray]:
    """Solve Hess·v = -grad on the tangent plane; None unless the Hessian is positive definite."""
    e1, e2 = _tangent_basis(p)
    basis = np.column_stack((e1, e2))
    u2 = units @ basis
    hess = np.zeros((2, 2))
    for wi, ci, ui in zip(weights, cots, u2):
        # Hess d = cot d (I - ĝĝᵀ) on the unit sphere
        hess += wi * ci * (np.eye(2) - np.outer(ui, ui))
    eig = np.linalg.eigvalsh(hess)
    if eig[0] <= 1e-12 * max(1.0, abs(eig[1])):
        return None
    v2 = np.linalg.solve(hess, -(g @ basis))
    return basis @ v2


def _local_terms(p: np.ndarray, vertices: np.ndarray):
    dots = vertices @ p
    tangents = vertices - np.outer(dots, p)
    sines = np.linalg.norm(tangents, axis=1)
    return dots, tangents, sines


def _residual_at(q: np.ndarray, vertices: np.ndarray, weights: np.ndarray) -> float:
    _, tangents, sines = _local_terms(q, vertices)
    if np.min(sines) < VERTEX_SIN_FLOOR:
        return math.inf
    return float(np.linalg.norm(weights @ (tangents / sines[:, None])))


def _line_search(p: np.ndarray, f: float, g: np.ndarray, residual: float, direction: np.ndarray,
                 t: float, vertices: np.ndarray, weights: np.ndarray, f_noise: float):
    """Backtrack along `direction`; returns (q, f(q)) or None when no step is accepted."""
    slope = float(np.dot(g, direction))
    while t > MIN_STEP:
        q = p + t * direction
        q /= np.linalg.norm(q)
        fq = _objective_at(q, vertices, weights)
        if fq <= f + ARMIJO_C * t * slope:
            return q, fq
        # objective differences are below rounding: accept if the gradient shrinks
        if f_noise > 0.0 and fq <= f + f_noise and _residual_at(q, vertices, weights) < residual:
            return q, fq
        t *= BACKTRACK
    return None


def descend(tri: GeodesicTriangle, w: Weights, start: np.ndarray,
            opts: Optional[OracleOptions] = None) -> DescentOutcome:
    """Riemannian descent from `start` with retraction normalize(p + t·direction)."""
    opts = opts or OracleOptions()
    vertices, weights = tri.matrix(), w.as_array()
    p = np.asarray(start, dtype=float)
    p = p / np.linalg.norm(p)
    f = _objective_at(p, vertices, weights)
    residual = math.inf

    for it in range(opts.max_iters):
        dots, tangents, sines = _local_terms(p, vertices)
        if np.min(sines) < VERTEX_SIN_FLOOR:
            return DescentOutcome(p, f, residual, it, False, "vertex")
        units = tangents / sines[:, None]
        g = -(weights @ units)
        g -= float(np.dot(g, p)) * p
        residual = float(np.linalg.norm(g))
        if residual < opts.tol_grad:
            return DescentOutcome(p, f, residual, it, True, "converged")

        f_noise = 0.0
        if residual < ROUNDING_REGION * float(weights.sum()):
            # rounding error of the objective, each arccos contributing about eps/sin d
            f_noise = OBJECTIVE_NOISE * np.finfo(float).eps * float(weights @ (1.0 / sines))
        step = None
        if opts.use_newton:
            direction = _newton_direction(p, g, units, dots / sines, weights)
            if direction is not None:
                length = float(np.linalg.norm(direction))
                t = 1.0 if length <= 1.0 else 1.0 / length
                step = _line_search(p, f, g, residual, direction, t, vertices, weights, f_noise)
        if step is None:
            step = _line_search(p, f, g, residual, -g / residual, opts.step_init, vertices, weights, f_noise)
        if step is None:
            return DescentOutcome(p, f, residual, it, False, "stalled")
        p, f = step

    residual = _residual_at(p, vertices, weights)
    return DescentOutcome(p, f, residual, opts.max_iters, residual < opts.tol_grad, "max_iters")


def _seeds(tri: GeodesicTriangle, w: Weights, opts: OracleOptions) -> List[np.ndarray]:
    vertices, weights = tri.matrix(), w.as_array()
    lattice = fibonacci_lattice(opts.scan_points)
    values = objective_values(lattice, vertices, weights)
    seeds = [lattice[int(np.argmin(values))]]
    for i, v in enumerate(vertices):
        others = [j for j in range(3) if j != i]
        # the pull of the other two vertices is the steepest way off A_i
        pull = weighted_tangent_sum(v, vertices[others], weights[others])
        if np.linalg.norm(pull) > weights[i]:
            pull /= np.linalg.norm(pull)
            seeds.append(math.cos(VERTEX_NUDGE) * v + math.sin(VERTEX_NUDGE) * pull)
    return seeds


def minimize(tri: GeodesicTriangle, w: Weights, opts: Optional[OracleOptions] = None) -> FermatResult:
    """
    Weighted Fermat-Torricelli point of any non-degenerate triangle.

    Raises NoConvergence when no descent certifies a residual below 10·tol_grad
    and no vertex does better.
    """
    opts = opts or OracleOptions()
    vertices, weights = tri.matrix(), w.as_array()

    outcomes = [descend(tri, w, seed, opts) for seed in _seeds(tri, w, opts)]
    certified = [o for o in outcomes if o.residual < 10.0 * opts.tol_grad]
    # first index wins ties
    best = min(certified or outcomes, key=lambda o: o.objective)
    vertex_values = [_objective_at(v, vertices, weights) for v in vertices]
    best_vertex = int(np.argmin(vertex_values))
    logger.debug(
        f"descents: {[(o.stop_reason, o.iterations, o.objective) for o in outcomes]}; "
        f"vertex objectives {vertex_values}"
    )

    if vertex_values[best_vertex] <= best.objective:
        return build_result(tri, w, tri.vertex(best_vertex + 1), CaseLabel.absorbed_at(best_vertex + 1))

    distances = np.arccos(np.clip(vertices @ best.point, -1.0, 1.0))
    nearest = int(np.argmin(distances))
    if distances[nearest] < opts.vertex_snap:
        logger.info(f"snapping minimizer to A{nearest + 1} (distance {distances[nearest]:.3e})")
        return build_result(tri, w, tri.vertex(nearest + 1), CaseLabel.absorbed_at(nearest + 1))

    if not best.residual < 10.0 * opts.tol_grad:
        raise NoConvergence(
            f"descent stopped ({best.stop_reason}) after {best.iterations} iterations "
            f"with gradient norm {best.residual:.3e}",
            best=UnitPoint.from_vector(best.point),
            residual=best.residual,
        )
    return build_result(tri, w, UnitPoint.from_vector(best.point), CaseLabel.interior())


def grid_scan(tri: GeodesicTriangle, w: Weights, resolution: int) -> np.ndarray:
    """
    Objective on a regular (ω, φ) grid: resolution² rows of (omega, phi, objective),
    ω-major. ω sits at cell centres so no pole row is repeated.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    omegas = -math.pi / 2 + (np.arange(resolution) + 0.5) * math.pi / resolution
    phis = np.arange(resolution) * 2.0 * math.pi / resolution
    om, ph = np.meshgrid(omegas, phis, indexing="ij")
    om, ph = om.ravel(), ph.ravel()
    points = np.column_stack((np.cos(om) * np.cos(ph), np.cos(om) * np.sin(ph), np.sin(om)))
    values = objective_values(points, tri.matrix(), w.as_array())
    return np.column_stack((om, ph, values))


def nearby_vertex(result: FermatResult, tol: float) -> Optional[int]:
    """1-based index of a vertex within `tol` of the result point, if any."""
    for i, d in enumerate(result.distances, start=1):
        if d < tol:
            return i
    return None
