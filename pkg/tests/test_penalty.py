import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fireworks.penalty import (Penalty, fermat_violation, penalty_deriv, penalty_value,
                               prox_1d)

SQRT3 = math.sqrt(3.0)


def objective_1d(pen, x, v, step):
    return (x - v) ** 2 / (2 * step) + pen.value(x)


@st.composite
def penalties(draw):
    kind = draw(st.sampled_from(["logsum", "mcp", "scad"]))
    lam = draw(st.floats(0.1, 10))
    lo = {"logsum": 0.0, "mcp": 1.0, "scad": 2.0}[kind]
    theta = lo + draw(st.floats(0.05, 5))
    return Penalty(kind, lam, theta)


class TestValidation:
    @pytest.mark.parametrize("kind, lam, theta", [
        ("logsum", 0.0, 1.0), ("logsum", -1.0, 1.0), ("logsum", 1.0, 0.0),
        ("mcp", 1.0, 1.0), ("scad", 1.0, 2.0), ("l0", 1.0, 1.0),
        ("mcp", float("nan"), 3.0),
    ])
    def test_rejects_bad_params(self, kind, lam, theta):
        with pytest.raises(ValueError):
            Penalty(kind, lam, theta)

    def test_negative_magnitude(self):
        pen = Penalty("logsum", 1.0, 1.0)
        with pytest.raises(ValueError):
            penalty_value(-1.0, pen)
        with pytest.raises(ValueError):
            penalty_deriv(-0.5, pen)


class TestExamples:
    def test_values(self):
        assert penalty_value(0.0, Penalty("logsum", 1, 1)) == 0.0
        assert penalty_value(3.0, Penalty("mcp", 1, 2)) == pytest.approx(1.0)
        assert penalty_value(4.0, Penalty("scad", 1, 3)) == pytest.approx(2.0)

    def test_derivs(self):
        assert penalty_deriv(0.0, Penalty("logsum", 1, 1)) == pytest.approx(1.0)
        assert penalty_deriv(0.0, Penalty("mcp", 1, 2)) == pytest.approx(1.0)
        assert penalty_deriv(5.0, Penalty("mcp", 1, 2)) == 0.0

    def test_thresholds(self):
        assert Penalty("logsum", 2.0, 4.0).threshold == pytest.approx(0.5)
        assert Penalty("mcp", 2.0, 4.0).threshold == 2.0
        assert Penalty("scad", 2.0, 4.0).threshold == 2.0

    @pytest.mark.parametrize("kind, theta", [("logsum", 1), ("mcp", 2), ("scad", 3)])
    def test_prox_of_zero(self, kind, theta):
        assert prox_1d(0.0, 1.0, Penalty(kind, 1, theta)) == 0.0

    def test_prox_mcp(self):
        assert prox_1d(1.5, 1.0, Penalty("mcp", 1, 2)) == pytest.approx(1.0)

    def test_prox_logsum(self):
        x = prox_1d(3.0, 1.0, Penalty("logsum", 1, 1))
        assert x == pytest.approx(1 + SQRT3, abs=1e-12)
        assert x * x - 2 * x - 2 == pytest.approx(0.0, abs=1e-12)

    def test_fermat(self):
        pen = Penalty("logsum", 1, 1)
        assert fermat_violation(0.5, 0.0, pen) == 0.0
        assert fermat_violation(1.7, 0.0, pen) == pytest.approx(0.7)
        assert fermat_violation(1 / (2 + SQRT3), 1 + SQRT3, pen) == pytest.approx(0, abs=1e-12)
        assert fermat_violation(-1 / (2 + SQRT3), -1 - SQRT3, pen) == pytest.approx(0, abs=1e-12)

    def test_prox_breaks_ties_toward_zero(self):
        # MCP with step = theta: objectives at 0 and at v coincide exactly
        pen = Penalty("mcp", 1.0, 1.5)
        assert objective_1d(pen, 0.0, 1.5, 1.5) == objective_1d(pen, 1.5, 1.5, 1.5)
        assert pen.prox(1.5, 1.5) == 0.0

    def test_array_and_scalar_agree(self):
        pen = Penalty("scad", 0.7, 3.7)
        v = np.linspace(-5, 5, 41)
        np.testing.assert_array_equal(pen.prox(v, 0.3), [pen.prox(t, 0.3) for t in v])
        np.testing.assert_array_equal(pen.value(v), [pen.value(t) for t in v])
        w = np.zeros(4)
        assert pen.total(w) == 0.0

    def test_frozen_values(self):
        # grid-oracle values, frozen
        cases = [(Penalty("scad", 1.0, 3.7), 2.0, 1.0), (Penalty("logsum", 0.5, 0.1), 1.2, 1.0)]
        for (pen, v, step), expect in zip(cases, [1.0, 0.0]):
            grid = np.linspace(-3, 3, 600001)
            best = grid[np.argmin((grid - v) ** 2 / (2 * step) + pen.value(grid))]
            assert best == pytest.approx(expect, abs=1e-4)
            assert pen.prox(v, step) == pytest.approx(expect, abs=1e-12)
        assert Penalty("mcp", 2.0, 3.0).value(1.0) == pytest.approx(11 / 6)


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(pen=penalties(), v=st.floats(-10, 10), step=st.floats(0.01, 5))
    def test_prox_beats_grid_oracle(self, pen, v, step):
        grid = np.linspace(-abs(v) - 1, abs(v) + 1, 40001)
        oracle = np.min((grid - v) ** 2 / (2 * step) + pen.value(grid))
        x = pen.prox(v, step)
        assert objective_1d(pen, x, v, step) <= oracle + 1e-6
        assert abs(x) <= abs(v)
        assert x == 0 or np.sign(x) == np.sign(v)

    @settings(max_examples=200, deadline=None)
    @given(pen=penalties(), a=st.floats(0, 50), b=st.floats(0, 50))
    def test_monotone_concave(self, pen, a, b):
        a, b = min(a, b), max(a, b)
        assert pen.value(a) <= pen.value(b) + 1e-12
        assert pen.deriv(a) >= pen.deriv(b) >= 0

    @settings(max_examples=200, deadline=None)
    @given(pen=penalties(), x=st.floats(0.01, 40))
    def test_deriv_matches_finite_difference(self, pen, x):
        h = 1e-6 * max(1.0, x)
        breaks = [pen.lam, pen.lam * pen.theta] if pen.kind != "logsum" else []
        if any(abs(x - b) < 10 * h for b in breaks):
            return
        fd = (pen.value(x + h) - pen.value(x - h)) / (2 * h)
        assert fd == pytest.approx(pen.deriv(x), rel=1e-6, abs=1e-7)

    @settings(max_examples=100, deadline=None)
    @given(kind=st.sampled_from(["mcp", "scad"]), lam=st.floats(0.1, 5),
           extra=st.floats(0.05, 5), margin=st.floats(1e-3, 10))
    def test_prox_identity_beyond_flat_threshold(self, kind, lam, extra, margin):
        theta = {"mcp": 1.0, "scad": 2.0}[kind] + extra
        pen = Penalty(kind, lam, theta)
        v = lam * theta + margin
        assert pen.prox(v, 1.0) == pytest.approx(v)
        assert pen.prox(-v, 1.0) == pytest.approx(-v)

    @settings(max_examples=200, deadline=None)
    @given(pen=penalties(), a=st.floats(-30, 30), h=st.floats(-1, 1))
    def test_value_change_matches_difference(self, pen, a, h):
        w, w_new = np.array([a]), np.array([a + h])
        expect = pen.value(abs(a + h)) - pen.value(abs(a))
        assert pen.value_change(w, w_new) == pytest.approx(expect, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(pen=penalties(), v=st.floats(-10, 10))
    def test_prox_output_satisfies_fermat_of_1d_problem(self, pen, v):
        # the prox with step 1 solves 0.5 (x - v)^2 + r(|x|), whose "correlation" is v - x
        x = pen.prox(v, 1.0)
        assert pen.fermat_violation(v - x, x) <= 1e-8
