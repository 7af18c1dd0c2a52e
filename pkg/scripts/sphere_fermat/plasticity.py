"""
Geometric-plasticity construction and its inverse problem.

Moving each vertex A_i toward the Fermat point A0 along the arc A_iA0 keeps
A0 as the weighted Fermat-Torricelli point of the new triangle. With
r_i = a0i - offset_i and the weight-determined angles at A0, the cosine law gives the
new sides:

    cos s12 = cos r1 cos r2 + sin r1 sin r2 · (w3² - w1² - w2²)/(2 w1 w2)

and cyclically for s23 and s13. The inverse solvers recover the offsets
(a, b, c) from target sides.
"""

import itertools
import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect

from classifier import classify
from closed_form import FermatResult, Weights, octant_floating, solve_octant, vertex_angles_from_weights
from fermat_utils import (
    DomainError,
    InfeasibleTarget,
    NoConvergence,
    NoRealSolution,
    NotFloating,
    OffsetTooLarge,
)
from oracle import OracleOptions, minimize
from sphere_core import GeodesicTriangle, point_on_geodesic

logger = logging.getLogger("sphere_fermat.plasticity")

HALF_PI = math.pi / 2
SIDE_SLACK = 1e-12
COS_DOMAIN_SLACK = 1e-9
NEWTON_STEP = 1e-7
NEWTON_TOL = 1e-12
NEWTON_MAX_ITERS = 100
MULTISTART_FRACTIONS = (0.1, 0.5, 0.9)
SCAN_SAMPLES = 2000
BISECT_XTOL = 1e-13
WEIERSTRASS_RESIDUAL_TOL = 1e-10
DUPLICATE_TOL = 1e-9
EXACT_ROOT_TOL = 1e-14

class ShrinkOffsets(BaseModel):
    """Arc lengths a, b, c moved along A1A0, A2A0, A3A0."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(ge=0.0, allow_inf_nan=False)
    b: float = Field(ge=0.0, allow_inf_nan=False)
    c: float = Field(ge=0.0, allow_inf_nan=False)

    @classmethod
    def of(cls, values: Sequence[float]) -> "ShrinkOffsets":
        a, b, c = (float(v) for v in values)
        return cls(a=a, b=b, c=c)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])


class TriangleSides(BaseModel):
    """Sides a'12, a'23, a'13 of the shrunken triangle."""

    model_config = ConfigDict(frozen=True)

    s12: float = Field(gt=0.0, le=HALF_PI + SIDE_SLACK)
    s23: float = Field(gt=0.0, le=HALF_PI + SIDE_SLACK)
    s13: float = Field(gt=0.0, le=HALF_PI + SIDE_SLACK)

    @classmethod
    def of(cls, values: Sequence[float]) -> "TriangleSides":
        s12, s23, s13 = (float(v) for v in values)
        return cls(s12=s12, s23=s23, s13=s13)

    def as_array(self) -> np.ndarray:
        return np.array([self.s12, self.s23, self.s13])


class HalfAngleTriple(BaseModel):
    """t = tan(x/2) for each offset."""

    model_config = ConfigDict(frozen=True)

    t_a: float
    t_b: float
    t_c: float

    @model_validator(mode="after")
    def _check_round_trip(self):
        for t in (self.t_a, self.t_b, self.t_c):
            x = 2.0 * math.atan(t)
            if (abs(math.sin(x) - 2.0 * t / (1.0 + t * t)) > 1e-12
                    or abs(math.cos(x) - (1.0 - t * t) / (1.0 + t * t)) > 1e-12):
                raise ValueError(f"half-angle value {t} does not round-trip")
        return self

    @classmethod
    def from_offsets(cls, off: ShrinkOffsets) -> "HalfAngleTriple":
        return cls(t_a=math.tan(off.a / 2.0), t_b=math.tan(off.b / 2.0), t_c=math.tan(off.c / 2.0))

    def angles(self) -> np.ndarray:
        """2·atan(t) for each entry; may be negative, so no ShrinkOffsets validation here."""
        return 2.0 * np.arctan(np.array([self.t_a, self.t_b, self.t_c]))


def _couplings(w: Weights) -> np.ndarray:
    """cos α102, cos α203, cos α103 in side order (12, 23, 13)."""
    vertex_angles_from_weights(w)
    w1, w2, w3 = w.as_tuple()
    return np.array([
        (w3 ** 2 - w1 ** 2 - w2 ** 2) / (2.0 * w1 * w2),
        (w1 ** 2 - w2 ** 2 - w3 ** 2) / (2.0 * w2 * w3),
        (w2 ** 2 - w1 ** 2 - w3 ** 2) / (2.0 * w1 * w3),
    ])


def _side_cosines(r: np.ndarray, k: np.ndarray) -> np.ndarray:
    c, s = np.cos(r), np.sin(r)
    return np.array([
        c[0] * c[1] + s[0] * s[1] * k[0],
        c[1] * c[2] + s[1] * s[2] * k[1],
        c[0] * c[2] + s[0] * s[2] * k[2],
    ])


def _remaining(a0: Sequence[float], off: ShrinkOffsets) -> np.ndarray:
    r = np.asarray(a0, dtype=float) - off.as_array()
    if np.any(r <= 0.0):
        raise OffsetTooLarge(f"offsets {off.as_array().tolist()} reach A0 (a0 = {list(a0)})")
    if np.any(r > HALF_PI + SIDE_SLACK):
        raise DomainError(f"remaining arcs {r.tolist()} exceed π/2")
    return r


def predicted_sides(a0: Sequence[float], off: ShrinkOffsets, w: Weights) -> TriangleSides:
    """Sides of the shrunken triangle from the cosine law at A0."""
    cosines = _side_cosines(_remaining(a0, off), _couplings(w))
    if np.any(np.abs(cosines) > 1.0 + COS_DOMAIN_SLACK):
        raise DomainError(f"side cosines {cosines.tolist()} leave [-1, 1]")
    sides = np.arccos(np.clip(cosines, -1.0, 1.0))
    if np.any(sides > HALF_PI + SIDE_SLACK) or np.any(sides <= 0.0):
        raise DomainError(f"predicted sides {sides.tolist()} fall outside (0, π/2]")
    return TriangleSides.of(sides)


def equation_residuals(a0: Sequence[float], off: ShrinkOffsets, w: Weights,
                       target: TriangleSides) -> np.ndarray:
    """Signed residual of each side equation in cosine form, order (12, 23, 13)."""
    return _side_cosines(np.asarray(a0, dtype=float) - off.as_array(), _couplings(w)) - np.cos(target.as_array())


def fermat_center(tri: GeodesicTriangle, w: Weights, opts: Optional[OracleOptions] = None) -> FermatResult:
    """Closed form on the octant triangle, oracle everywhere else."""
    if tri.is_octant() and octant_floating(w):
        return solve_octant(w)
    return minimize(tri, w, opts)


def shrink_triangle(tri: GeodesicTriangle, w: Weights, off: ShrinkOffsets,
                    center: Optional[FermatResult] = None) -> GeodesicTriangle:
    """Move each vertex toward the Fermat point by its offset."""
    decision = classify(tri, w)
    if not decision.floating:
        raise NotFloating(f"minimizer is absorbed at A{decision.vertex}; nothing to shrink toward")
    if center is None:
        center = fermat_center(tri, w)
    if center.case_label.kind != "interior":
        raise NotFloating("Fermat point of the base triangle is not interior")

    a0 = np.array(center.distances)
    offsets = off.as_array()
    if np.any(offsets >= a0):
        raise OffsetTooLarge(f"offsets {offsets.tolist()} must stay below a0 = {a0.tolist()}")

    moved = [point_on_geodesic(v, center.point, s) for v, s in zip(tri.vertices(), offsets)]
    logger.debug(f"shrunk vertices toward {center.point.as_tuple()} by {offsets.tolist()}")
    return GeodesicTriangle(v1=moved[0], v2=moved[1], v3=moved[2])


def _equal_angle_guess(target: TriangleSides, k: np.ndarray, a0: np.ndarray) -> np.ndarray:
    """Offsets from assuming both arcs of each side are equal: cos² r = (cos s - K)/(1 - K)."""
    cos_r2 = np.clip((np.cos(target.as_array()) - k) / (1.0 - k), 0.0, 1.0)
    r_side = np.arccos(np.sqrt(cos_r2))
    r = np.array([
        (r_side[0] + r_side[2]) / 2.0,
        (r_side[0] + r_side[1]) / 2.0,
        (r_side[1] + r_side[2]) / 2.0,
    ])
    return np.clip(a0 - r, 0.0, 0.999 * a0)


def _newton(residual_fn, x0: np.ndarray) -> Tuple[np.ndarray, float, bool]:
    x = np.array(x0, dtype=float)
    f0 = residual_fn(x)
    norm0 = float(np.max(np.abs(f0)))
    for _ in range(NEWTON_MAX_ITERS):
        if norm0 < NEWTON_TOL:
            return x, norm0, True
        jacob = np.empty((3, 3))
        for i in range(3):
            dx = np.zeros(3)
            dx[i] = NEWTON_STEP
            jacob[:, i] = (residual_fn(x + dx) - residual_fn(x - dx)) / (2.0 * NEWTON_STEP)
        try:
            step = np.linalg.solve(jacob, -f0)
        except np.linalg.LinAlgError:
            return x, norm0, False
        # halve the step until the residual drops
        scale = 1.0
        while scale > 1e-6:
            trial = x + scale * step
            f_trial = residual_fn(trial)
            norm_trial = float(np.max(np.abs(f_trial)))
            if norm_trial < norm0:
                break
            scale *= 0.5
        else:
            return x, norm0, norm0 < NEWTON_TOL
        x, f0, norm0 = trial, f_trial, norm_trial
    return x, norm0, norm0 < NEWTON_TOL


def _check_feasible(offsets: np.ndarray, a0: np.ndarray) -> Optional[ShrinkOffsets]:
    if np.any(offsets < -SIDE_SLACK) or np.any(offsets >= a0):
        return None
    return ShrinkOffsets.of(np.maximum(offsets, 0.0))


def invert_sides_newton(target: TriangleSides, w: Weights, a0: Sequence[float]) -> ShrinkOffsets:
    """Offsets (a, b, c) whose shrunken triangle has the target sides, by Newton's method."""
    k = _couplings(w)
    a0 = np.asarray(a0, dtype=float)
    cos_target = np.cos(target.as_array())

    def residual_fn(x: np.ndarray) -> np.ndarray:
        return _side_cosines(a0 - x, k) - cos_target

    starts = [_equal_angle_guess(target, k, a0)] + [f * a0 for f in MULTISTART_FRACTIONS]
    best_x, best_norm = starts[0], math.inf
    infeasible = []
    for n, start in enumerate(starts):
        if n:
            logger.warning(f"Newton restart {n} from offsets {start.tolist()}")
        x, norm, converged = _newton(residual_fn, start)
        if norm < best_norm:
            best_x, best_norm = x, norm
        if not converged:
            continue
        solution = _check_feasible(x, a0)
        if solution is not None:
            return solution
        infeasible.append(x.tolist())

    if infeasible:
        raise InfeasibleTarget(
            f"Newton converged only to offsets outside [0, a0) with a0 = {a0.tolist()}: {infeasible}"
        )
    raise NoConvergence(
        f"Newton did not reach residual {NEWTON_TOL:g} (best {best_norm:.3e})",
        best=best_x.tolist(),
        residual=best_norm,
    )


def _quadratic_branches(qa, qb, qc) -> Tuple[np.ndarray, np.ndarray]:
    """
    Roots of qa·t² + qb·t + qc = 0 as (minus-branch, plus-branch) arrays;
    NaN where no real root exists. Uses the cancellation-free pairing of the
    two root formulas.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = qb * qb - 4.0 * qa * qc
        q = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
        den = np.where(qb >= 0.0, -qb - q, -qb + q)
        near = den / (2.0 * qa)
        far = 2.0 * qc / den
        minus = np.where(qb >= 0.0, near, far)
        plus = np.where(qb >= 0.0, far, near)
    minus = np.where(np.isfinite(minus), minus, np.nan)
    plus = np.where(np.isfinite(plus), plus, np.nan)
    return minus, plus


def _half_angle_trig(t):
    denom = 1.0 + t * t
    return (1.0 - t * t) / denom, 2.0 * t / denom


class _WeierstrassSystem:
    """The three side equations after t = tan(x/2), reduced to one unknown t_b."""

    def __init__(self, target: TriangleSides, w: Weights, a0: np.ndarray):
        self.k = _couplings(w)
        self.a0 = a0
        self.cos_target = np.cos(target.as_array())

    def _branch(self, t_b, d: float, coupling: float, cos_side: float):
        cos_b, sin_b = _half_angle_trig(t_b)
        d2 = self.a0[1]
        p = np.cos(d2) * cos_b + np.sin(d2) * sin_b
        q = coupling * (np.sin(d2) * cos_b - np.cos(d2) * sin_b)
        alpha = p * np.cos(d) + q * np.sin(d)
        beta = p * np.sin(d) - q * np.cos(d)
        return _quadratic_branches(alpha + cos_side, -2.0 * beta, cos_side - alpha)

    def t_a(self, t_b):
        return self._branch(t_b, self.a0[0], self.k[0], self.cos_target[0])

    def t_c(self, t_b):
        return self._branch(t_b, self.a0[2], self.k[1], self.cos_target[1])

    def closing(self, t_b, branch_a: int, branch_c: int):
        """Residual of the remaining (13) equation on one branch pair."""
        t_a = self.t_a(t_b)[branch_a]
        t_c = self.t_c(t_b)[branch_c]
        cos_a, sin_a = _half_angle_trig(t_a)
        cos_c, sin_c = _half_angle_trig(t_c)
        d1, d3 = self.a0[0], self.a0[2]
        cos_r1 = np.cos(d1) * cos_a + np.sin(d1) * sin_a
        sin_r1 = np.sin(d1) * cos_a - np.cos(d1) * sin_a
        cos_r3 = np.cos(d3) * cos_c + np.sin(d3) * sin_c
        sin_r3 = np.sin(d3) * cos_c - np.cos(d3) * sin_c
        return cos_r1 * cos_r3 + self.k[2] * sin_r1 * sin_r3 - self.cos_target[2]


def _branch_name(branch_a: int, branch_c: int) -> str:
    sign = {0: "-", 1: "+"}
    return f"a{sign[branch_a]}/c{sign[branch_c]}"


def invert_sides_weierstrass(target: TriangleSides, w: Weights,
                             a0: Sequence[float]) -> List[ShrinkOffsets]:
    """Every feasible offset triple for the target sides, via the half-angle substitution."""
    a0 = np.asarray(a0, dtype=float)
    system = _WeierstrassSystem(target, w, a0)
    samples = np.linspace(0.0, math.tan(a0[1] / 2.0), SCAN_SAMPLES, endpoint=False)

    roots: List[Tuple[float, int, int]] = []
    diagnostics: List[Dict[str, Any]] = []
    for branch_a, branch_c in itertools.product((0, 1), (0, 1)):
        values = system.closing(samples, branch_a, branch_c)
        finite = np.isfinite(values)
        found = 0
        for i in range(SCAN_SAMPLES - 1):
            if not (finite[i] and finite[i + 1]):
                continue
            if abs(values[i]) < EXACT_ROOT_TOL:
                roots.append((float(samples[i]), branch_a, branch_c))
                found += 1
            elif values[i] * values[i + 1] < 0.0:
                root = bisect(
                    lambda t: float(system.closing(t, branch_a, branch_c)),
                    samples[i], samples[i + 1], xtol=BISECT_XTOL,
                )
                roots.append((float(root), branch_a, branch_c))
                found += 1
        diagnostics.append({
            "branch": _branch_name(branch_a, branch_c),
            "valid_samples": int(finite.sum()),
            "sign_changes": found,
        })

    solutions: List[ShrinkOffsets] = []
    for t_b, branch_a, branch_c in sorted(roots):
        t_a = float(system.t_a(t_b)[branch_a])
        t_c = float(system.t_c(t_b)[branch_c])
        if not (math.isfinite(t_a) and math.isfinite(t_c)):
            continue
        offsets = HalfAngleTriple(t_a=t_a, t_b=t_b, t_c=t_c).angles()
        candidate = _check_feasible(offsets, a0)
        if candidate is None:
            continue
        residual = float(np.max(np.abs(equation_residuals(a0, candidate, w, target))))
        if residual >= WEIERSTRASS_RESIDUAL_TOL:
            logger.debug(f"dropping branch root t_b={t_b} with residual {residual:.3e}")
            continue
        if any(np.max(np.abs(candidate.as_array() - s.as_array())) < DUPLICATE_TOL for s in solutions):
            continue
        solutions.append(candidate)

    if not solutions:
        raise NoRealSolution(
            f"no feasible real solution on any branch for target {target.as_array().tolist()}",
            diagnostics=diagnostics,
        )
    logger.debug(f"Weierstrass scan found {len(solutions)} solution(s); branches {diagnostics}")
    return solutions
