"""Tests for the floating/absorbed decision."""
import math

import numpy as np
import pydantic
import pytest

from classifier import CaseDecision, classify, stationarity_residual, vertex_margin
from closed_form import Weights, solve_octant
from conftest import random_triangle
from fermat_utils import AmbiguousAbsorption
from oracle import OracleOptions, minimize, nearby_vertex
from sphere_core import GeodesicTriangle, UnitPoint

INV_SQRT3 = 1.0 / math.sqrt(3.0)


def test_equal_weights_float(octant):
    decision = classify(octant, Weights.of((1, 1, 1)))
    assert decision.floating
    assert decision.vertex is None
    np.testing.assert_allclose(decision.margins, [math.sqrt(2.0) - 1.0] * 3, atol=1e-15)


def test_boundary_triple_is_absorbed(octant):
    decision = classify(octant, Weights.of((3, 4, 5)))
    assert decision.label == "absorbed"
    assert decision.vertex == 3
    assert abs(decision.margins[2]) < 1e-12


def test_dominant_weight_absorbs(octant):
    decision = classify(octant, Weights.of((1, 1, 10)))
    assert decision.label == "absorbed"
    assert decision.vertex == 3
    assert vertex_margin(octant, Weights.of((1, 1, 10)), 3) == pytest.approx(math.sqrt(2.0) - 10.0)


def test_two_absorbed_vertices_are_ambiguous():
    # obtuse angles at A1 and A2 (possible on the sphere) with a light A3
    tri = GeodesicTriangle.from_vectors((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (-0.2, -0.2, 1.0))
    with pytest.raises(AmbiguousAbsorption):
        classify(tri, Weights.of((1, 1, 0.1)))


def test_decision_must_match_margins():
    with pytest.raises(pydantic.ValidationError):
        CaseDecision(label="floating", margins=(0.1, -0.2, 0.3))
    with pytest.raises(pydantic.ValidationError):
        CaseDecision(label="absorbed", vertex=1, margins=(0.1, -0.2, 0.3))


def test_stationarity_residual(octant):
    w = Weights.of((1, 1, 1))
    assert stationarity_residual(octant, w, UnitPoint(x=1.0, y=1.0, z=1.0)) < 1e-10
    assert stationarity_residual(octant, Weights.of((4, 5, 6)), solve_octant(Weights.of((4, 5, 6))).point) < 1e-8
    near_vertex = UnitPoint(x=0.999, y=0.03, z=0.03)
    assert stationarity_residual(octant, w, near_vertex) > 0.3


def test_classifier_agrees_with_oracle(rng):
    opts = OracleOptions(scan_points=5000)
    checked = 0
    while checked < 500:
        tri = random_triangle(rng)
        w = Weights.of(rng.uniform(1.0, 10.0, size=3))
        try:
            decision = classify(tri, w)
        except AmbiguousAbsorption:
            continue
        # stay clear of the floating/absorbed boundary, where both answers are within rounding
        if any(abs(m) < 1e-2 * wi for m, wi in zip(decision.margins, w.as_tuple())):
            continue
        result = minimize(tri, w, opts)
        vertex = nearby_vertex(result, 1e-4)
        if decision.floating:
            assert vertex is None
            assert result.case_label.kind == "interior"
        else:
            assert vertex == decision.vertex
            assert result.case_label.vertex == decision.vertex
        checked += 1


def test_classification_ignores_weight_scale(rng):
    for _ in range(100):
        tri = random_triangle(rng)
        w = Weights.of(rng.uniform(1.0, 10.0, size=3))
        try:
            decision = classify(tri, w)
        except AmbiguousAbsorption:
            continue
        if min(abs(m) for m in decision.margins) < 1e-6:
            continue
        for factor in (1e-3, 7.5, 1e4):
            scaled = classify(tri, w.scaled(factor))
            assert (scaled.label, scaled.vertex) == (decision.label, decision.vertex)
            np.testing.assert_allclose(scaled.margins, np.array(decision.margins) * factor,
                                       rtol=0.0, atol=1e-12 * factor * max(w.as_tuple()))


@pytest.mark.parametrize("order", [(2, 3, 1), (3, 1, 2), (2, 1, 3), (1, 3, 2), (3, 2, 1)])
def test_classification_follows_vertex_relabeling(rng, order):
    for _ in range(50):
        tri = random_triangle(rng)
        w = Weights.of(rng.uniform(1.0, 10.0, size=3))
        try:
            decision = classify(tri, w)
        except AmbiguousAbsorption:
            continue
        relabeled = classify(tri.permuted(order), w.permuted(order))
        np.testing.assert_allclose(relabeled.margins, [decision.margins[i - 1] for i in order], atol=1e-12)
        assert relabeled.label == decision.label
        if decision.vertex is not None:
            assert relabeled.vertex == order.index(decision.vertex) + 1
