"""
Floating vs absorbed decision for a weighted geodesic triangle.

The margin at vertex i is ‖w_j U_{A_iA_j} + w_k U_{A_iA_k}‖ - w_i. The
minimizer floats when every margin is positive and is absorbed at A_i when
margin_i ≤ 0 (equality counts as absorbed).
"""

import logging
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from closed_form import Weights
from fermat_utils import AmbiguousAbsorption, DegenerateDirection, DegenerateTriangle
from sphere_core import GeodesicTriangle, UnitPoint, unit_tangent

logger = logging.getLogger("sphere_fermat.classifier")

MARGIN_EQUALITY_TOL = 1e-12


class CaseDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: Literal["floating", "absorbed"]
    vertex: Optional[int] = Field(default=None, ge=1, le=3)
    margins: Tuple[float, float, float]

    @model_validator(mode="after")
    def _check_label(self):
        absorbed = [i for i, m in enumerate(self.margins, start=1) if m <= MARGIN_EQUALITY_TOL]
        if self.label == "floating" and (absorbed or self.vertex is not None):
            raise ValueError("a floating decision needs every margin positive")
        if self.label == "absorbed" and absorbed != [self.vertex]:
            raise ValueError("an absorbed decision needs exactly its own margin non-positive")
        return self

    @property
    def floating(self) -> bool:
        return self.label == "floating"


def vertex_margin(tri: GeodesicTriangle, w: Weights, i: int) -> float:
    """Pull of the other two vertices at A_i minus w_i; positive means A_i is not the minimizer."""
    j, k = [n for n in (1, 2, 3) if n != i]
    apex = tri.vertex(i)
    pull = (w.weight(j) * unit_tangent(apex, tri.vertex(j)).vector
            + w.weight(k) * unit_tangent(apex, tri.vertex(k)).vector)
    return float(np.linalg.norm(pull)) - w.weight(i)


def classify(tri: GeodesicTriangle, w: Weights) -> CaseDecision:
    """Decide floating vs absorbed from the three vertex margins."""
    try:
        margins = tuple(vertex_margin(tri, w, i) for i in (1, 2, 3))
    except DegenerateDirection as e:
        raise DegenerateTriangle(f"triangle has no tangent directions at a vertex: {e}") from e

    absorbed = [i for i, m in enumerate(margins, start=1) if m <= MARGIN_EQUALITY_TOL]
    if len(absorbed) > 1:
        raise AmbiguousAbsorption(
            f"vertices {absorbed} all satisfy the absorbed inequality (margins {margins})"
        )
    if absorbed:
        logger.debug(f"absorbed at A{absorbed[0]} with margins {margins}")
        return CaseDecision(label="absorbed", vertex=absorbed[0], margins=margins)
    return CaseDecision(label="floating", margins=margins)


def stationarity_residual(tri: GeodesicTriangle, w: Weights, p: UnitPoint) -> float:
    """‖Σ w_i U_{pA_i}‖; zero exactly at an interior minimizer."""
    total = sum(wi * unit_tangent(p, v).vector for wi, v in zip(w.as_tuple(), tri.vertices()))
    return float(np.linalg.norm(total))
