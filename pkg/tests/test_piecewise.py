import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from minimax_boundary.piecewise import (PiecewiseQuadratic, evaluate, inner_product, norm_sq,
                                        quadrature_norm_sq)

finite = st.floats(-3.0, 3.0, allow_nan=False)


@st.composite
def shapes(draw, max_pieces=6):
    n = draw(st.integers(1, max_pieces))
    lengths = draw(st.lists(st.floats(0.05, 2.0), min_size=n, max_size=n))
    curv = draw(st.lists(finite, min_size=n, max_size=n))
    knots = np.concatenate([[0.0], np.cumsum(lengths)])
    return PiecewiseQuadratic.from_curvatures(knots, draw(finite), draw(finite), curv)


def simple():
    # 1 - t^2/2 on [0, 1), then curvature +1 from the reached state
    return PiecewiseQuadratic.from_curvatures([0.0, 1.0, 2.0], 1.0, 0.0, [-1.0, 1.0])


class TestConstruction:
    def test_from_curvatures_integrates_states(self):
        p = simple()
        assert_allclose(p.values, [1.0, 0.5])
        assert_allclose(p.slopes, [0.0, -1.0])

    def test_rejects_bad_knots(self):
        with pytest.raises(ValueError):
            PiecewiseQuadratic([0.0, 1.0, 1.0], [0, 0], [0, 0], [0, 0])
        with pytest.raises(ValueError):
            PiecewiseQuadratic([0.5, 1.0], [0], [0], [0])
        with pytest.raises(ValueError):
            PiecewiseQuadratic([0.0, 1.0], [0, 1], [0], [0])

    def test_arrays_are_read_only(self):
        p = simple()
        with pytest.raises(ValueError):
            p.values[0] = 3.0

    def test_zero(self):
        z = PiecewiseQuadratic.zero()
        assert z.n_pieces == 0
        assert z(1.0) == 0.0
        assert norm_sq(z) == 0.0


class TestEvaluation:
    def test_values_and_tail(self):
        p = simple()
        assert p(0.0) == 1.0
        assert_allclose(p(0.5), 1.0 - 0.125)
        assert_allclose(p(1.5), 0.5 - 0.5 + 0.125)
        assert p(5.0) == 0.0
        assert evaluate(p, 0.0) == 1.0

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            simple()(-0.1)

    def test_derivative(self):
        p = simple()
        assert_allclose(p.derivative([0.0, 0.5, 1.5]), [0.0, -0.5, -0.5])

    def test_gluing_residuals_zero_when_built_from_curvatures(self):
        dv, ds = simple().gluing_residuals()
        assert_allclose(dv[:-1], 0.0, atol=1e-15)
        assert_allclose(ds[:-1], 0.0, atol=1e-15)

    @given(shapes(), st.floats(0.1, 3.0), st.floats(0.2, 5.0))
    def test_rescaling_commutes_with_evaluation(self, p, amp, lam):
        q = p.rescaled(amp, lam)
        # piece midpoints and a point in the tail; a knot may round to either side
        edges = np.append(q.knots, 1.5 * q.support_end)
        t = 0.5 * (edges[:-1] + edges[1:])
        assert_allclose(q(t), amp * p(lam * t), rtol=1e-12, atol=1e-12)


class TestIntegration:
    def test_norm_of_simple(self):
        # int_0^1 (1 - t^2/2)^2 + int_0^1 (0.5 - x + x^2/2)^2
        expected = (1 - 1 / 3 + 1 / 20) + (0.25 - 0.5 + 0.5 - 0.25 + 0.05)
        assert_allclose(norm_sq(simple()), expected, rtol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(shapes())
    def test_closed_form_matches_quadrature(self, p):
        assert_allclose(norm_sq(p), quadrature_norm_sq(p), rtol=1e-10, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(shapes())
    def test_inner_product_with_self_is_norm(self, p):
        assert_allclose(inner_product(p, p), norm_sq(p), rtol=1e-11, atol=1e-13)

    @given(shapes(), shapes())
    def test_inner_product_symmetric(self, p, q):
        assert_allclose(inner_product(p, q), inner_product(q, p), rtol=1e-12, atol=1e-13)

    @given(shapes(), st.floats(0.1, 3.0), st.floats(0.2, 5.0))
    def test_norm_scaling(self, p, amp, lam):
        assert_allclose(norm_sq(p.rescaled(amp, lam)), amp**2 / lam * norm_sq(p), rtol=1e-11,
                        atol=1e-13)

    def test_nonzero_tail_is_not_integrable(self):
        p = PiecewiseQuadratic([0.0, 1.0], [1.0], [0.0], [0.0], tail_value=1.0)
        with pytest.raises(ValueError):
            norm_sq(p)
        with pytest.raises(ValueError):
            inner_product(p, p)


class TestSerialization:
    @given(shapes())
    def test_json_round_trip_is_exact(self, p):
        q = PiecewiseQuadratic.from_json(p.to_json())
        for name in ("knots", "values", "slopes", "curvatures"):
            np.testing.assert_array_equal(getattr(q, name), getattr(p, name))

    def test_document_layout(self):
        doc = json.loads(simple().to_json())
        assert list(doc) == ["knots", "pieces", "tail_value"]
        assert list(doc["pieces"][0]) == ["value", "slope", "curvature"]

    def test_seventeen_digits(self):
        text = PiecewiseQuadratic([0.0, 0.1], [1 / 3], [0.0], [0.0]).to_json()
        assert "0.33333333333333331" in text
