import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from minimax_boundary.exceptions import ConvergenceError, DomainError
from minimax_boundary.kernel_risk import NoiseModel
from minimax_boundary.least_favorable import SmoothnessParams
from minimax_boundary.oracle import (DiscretizedProblem, _objective_gradient, _Operator,
                                     recovered_support, run_battery, solve_discretized,
                                     verify_delta_star, verify_modulus_curve, verify_rd_split)

UNIT = SmoothnessParams(1.0)


class TestDiscretization:
    def test_gradient_matches_finite_differences(self):
        for free in (True, False):
            op = _Operator(DiscretizedProblem(4.0, 600, constrain_initial_slope_zero=not free))
            rng = np.random.default_rng(3)
            u = rng.uniform(-1, 1, 600)
            d = rng.standard_normal(600)

            def J(x):
                f, _ = op.values(x)
                return float(op.w @ (f * f))

            f, _ = op.values(u)
            g = np.empty(600)
            _objective_gradient(f, op.w, op.h, g)
            eps = 1e-6
            fd = (J(u + eps * d) - J(u - eps * d)) / (2 * eps)
            assert_allclose(g @ d, fd, rtol=1e-6)

    def test_zero_curvature_gives_line(self):
        op = _Operator(DiscretizedProblem(4.0, 500, constrain_initial_slope_zero=True))
        f, v0 = op.values(np.zeros(500))
        assert v0 == 0.0
        np.testing.assert_array_equal(f, 1.0)

    def test_constant_curvature_is_exact_parabola(self):
        p = DiscretizedProblem(4.0, 500, constrain_initial_slope_zero=True)
        f, _ = _Operator(p).values(np.ones(500))
        assert_allclose(f, 1 + p.times**2 / 2, rtol=1e-12)

    def test_preconditions(self):
        with pytest.raises(DomainError):
            solve_discretized(DiscretizedProblem(4.0, 499))
        with pytest.raises(DomainError):
            solve_discretized(DiscretizedProblem(2.9, 1000))
        with pytest.raises(DomainError):
            solve_discretized(DiscretizedProblem(4.0, 1000), tol=1e-5)

    def test_nonconvergence_carries_iterate(self):
        with pytest.raises(ConvergenceError) as info:
            solve_discretized(DiscretizedProblem(4.0, 500), max_iters=100)
        res = info.value.result
        assert res is not None and not res.converged
        assert res.iterations == 100
        assert np.all(np.abs(res.curvatures) <= 1.0)


class TestFreeSlope:
    def test_minimum_norm(self, free_run, consts):
        assert abs(free_run.min_norm_sq - 0.26672) <= 0.005
        assert abs(free_run.min_norm_sq - consts.I_star) <= 0.005

    def test_initial_slope(self, free_run):
        assert abs(free_run.initial_slope + 1.4997) <= 0.01

    def test_exact_feasibility(self, free_run):
        assert free_run.solution_values[0] == 1.0
        assert np.all(np.abs(free_run.curvatures) <= 1.0)

    def test_close_to_constructed(self, free_run, f_star):
        gap = np.max(np.abs(free_run.solution_values - f_star.shape(free_run.times)))
        assert gap <= 0.01

    def test_curvature_at_bound(self, free_run):
        assert free_run.active_fraction() >= 0.95

    def test_support_in_range(self, free_run):
        assert 2.3 <= free_run.recovered_support <= 2.8
        assert recovered_support(free_run) == free_run.recovered_support

    def test_serialization(self, free_run, tmp_path):
        doc = free_run.to_dict()
        assert list(doc) == ["T", "N", "constrained_slope", "min_norm_sq", "initial_slope",
                             "recovered_support", "iterations", "kkt_residual"]
        free_run.to_csv(tmp_path / "f.csv")
        lines = (tmp_path / "f.csv").read_text().splitlines()
        assert lines[0] == "t,f" and len(lines) == 4002


class TestZeroSlope:
    def test_minimum_norm(self, zero_slope_run, consts):
        assert abs(zero_slope_run.min_norm_sq - 0.76402) <= 0.005
        assert abs(zero_slope_run.min_norm_sq - consts.I0) <= 0.005
        assert zero_slope_run.initial_slope == 0.0

    def test_support_near_accumulation_point(self, zero_slope_run, interior):
        assert abs(zero_slope_run.recovered_support - interior.support_limit) <= 0.05


def test_support_falls_back_to_horizon(free_run):
    flat = dataclasses.replace(free_run, solution_values=np.ones_like(free_run.solution_values))
    assert recovered_support(flat) == flat.problem.horizon


def test_error_shrinks_with_grid(consts):
    errs = []
    for n in (500, 1000):
        res = solve_discretized(DiscretizedProblem(4.0, n), tol=1e-8)
        errs.append(abs(res.min_norm_sq - consts.I_star))
    assert errs[0] / errs[1] >= 1.5


@pytest.fixture(scope="module")
def curve(consts):
    deltas = [0.25, 0.5, math.sqrt(consts.I_star), 1.0, 2.0]
    return verify_modulus_curve(deltas, UNIT)


class TestModulusCurve:
    def test_within_two_percent(self, curve):
        for delta, b_or, b_cf in curve:
            assert abs(b_or / b_cf - 1) <= 0.02, delta

    def test_anchor_and_unit_delta(self, curve):
        assert abs(curve[2][1] - 1.0) <= 0.01
        assert abs(curve[3][1] - 1.69669) <= 0.02

    def test_monotone(self, curve):
        ordered = sorted(curve)
        b = [row[1] for row in ordered]
        assert all(x < y for x, y in zip(b, b[1:]))

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            verify_modulus_curve([0.0], UNIT)


class TestDeltaStar:
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_argmax(self, sigma):
        d, _ = verify_delta_star(NoiseModel(sigma), UNIT)
        assert abs(d / (2 * sigma) - 1) <= 1e-4

    def test_value(self, consts):
        _, val = verify_delta_star(NoiseModel(1.0), UNIT)
        assert_allclose(val, 2**1.6 * consts.I_star**-0.8 / 5, rtol=1e-6)

    def test_c_homogeneity(self):
        _, r1 = verify_delta_star(NoiseModel(1.0), UNIT)
        _, r2 = verify_delta_star(NoiseModel(1.0), SmoothnessParams(2.0))
        assert abs(r2 / r1 - 2**0.4) <= 1e-6


class TestRDSplit:
    def test_unit(self):
        a, val = verify_rd_split(1.0)
        assert abs(a - 0.5) <= 1e-8
        assert_allclose(val, 2**-1.5, rtol=1e-12)

    @pytest.mark.parametrize("b", [0.3, 2.0, 7.0])
    def test_value_law(self, b):
        a, val = verify_rd_split(b)
        assert abs(a - b / 2) <= 1e-8 * max(1.0, b)
        assert_allclose(val, b**2.5 / 2**1.5, rtol=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            verify_rd_split(0.0)


def test_quick_battery_passes():
    report = run_battery("quick", grid_n=500, horizon=4.0)
    assert report.passed, report.failed()
    doc = report.to_dict()
    assert doc["support_adjudication"]["candidates"]["display"] == pytest.approx(2.44121, abs=1e-5)
    names = [c["name"] for c in doc["checks"]]
    assert "support_adjudication_decisive" in names
