import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbubble.delaunay import (
    CurveState,
    DelaunayClass,
    DelaunayParams,
    StopSpec,
    classify,
    cylinder_force,
    evaluate_ode,
    force,
    heights_at_angle,
    state_from_invariants,
    trace,
)
from dbubble.errors import DomainError, NoSuchPoint
from dbubble.sampling import unit_height_curve

from conftest import richardson


def approx_tuple(a, b, tol=1e-14):
    return all(abs(u - v) <= tol for u, v in zip(a, b))


class TestEvaluate:
    def test_sphere_top(self):
        out = evaluate_ode(CurveState(0, 1, 0), DelaunayParams(3, 1.0))
        assert approx_tuple(out, (1, 0, -1, 0))

    def test_vertical_line(self):
        out = evaluate_ode(CurveState(0, 1, math.pi / 2), DelaunayParams(5, 0.0))
        assert approx_tuple(out, (0, 1, 0, 0))

    def test_cylinder(self):
        out = evaluate_ode(CurveState(0, 1, 0), DelaunayParams(3, 0.5))
        assert approx_tuple(out, (1, 0, 0, 0))

    @pytest.mark.parametrize("y", [0.0, -1.0])
    def test_rejects_axis(self, y):
        with pytest.raises(DomainError):
            evaluate_ode(CurveState(0, y, 0), DelaunayParams(3, 1.0))
        with pytest.raises(DomainError):
            force(CurveState(0, y, 0), DelaunayParams(3, 1.0))

    def test_n2_rejected(self):
        with pytest.raises(DomainError):
            DelaunayParams(2, 1.0)


class TestForce:
    def test_examples(self):
        assert force(CurveState(0, 1, 0), DelaunayParams(3, 1.0)) == 0.0
        assert force(CurveState(0, 1, 0), DelaunayParams(3, 0.5)) == 0.5
        assert force(CurveState(0, 2, math.pi / 3), DelaunayParams(4, 0.0)) == pytest.approx(2.0, rel=1e-15)

    def test_cylinder_force_is_fixed_point(self):
        for n in range(3, 9):
            H = 0.7
            r = (n - 2) / ((n - 1) * H)
            assert force(CurveState(0, r, 0), DelaunayParams(n, H)) == pytest.approx(cylinder_force(n, H), rel=1e-14)
            assert evaluate_ode(CurveState(0, r, 0), DelaunayParams(n, H))[2] == pytest.approx(0, abs=1e-14)


class TestClassify:
    @pytest.mark.parametrize(
        "H,F,expected",
        [
            (0.0, 2.0, DelaunayClass.CATENOID_TYPE),
            (1.0, 0.0, DelaunayClass.SPHERE),
            (0.0, 0.0, DelaunayClass.VERTICAL_HYPERPLANE),
            (1.0, -0.5, DelaunayClass.NODOID),
            (1.0, 0.2, DelaunayClass.UNDULOID_OR_CYLINDER),
            (-1.0, -0.2, DelaunayClass.UNDULOID_OR_CYLINDER),
            (0.5, 0.5, DelaunayClass.CYLINDER),
        ],
    )
    def test_table(self, H, F, expected):
        assert classify(3, H, F, 1e-12) is expected

    def test_tolerance_scales(self):
        # F = 1e-13 counts as zero at unit scale but not at scale 1e-3 in n = 5
        assert classify(5, 1.0, 1e-13, 1e-12) is DelaunayClass.SPHERE
        assert classify(5, 1.0, 1e-13, 1e-12, scale=1e-3) is DelaunayClass.UNDULOID_OR_CYLINDER

    def test_bad_tol(self):
        with pytest.raises(DomainError):
            classify(3, 1.0, 0.0, 0.0)

    @given(
        n=st.integers(3, 8),
        H=st.floats(-5, 5, allow_nan=False),
        F=st.floats(-5, 5, allow_nan=False),
    )
    def test_total(self, n, H, F):
        assert isinstance(classify(n, H, F, 1e-12), DelaunayClass)


class TestInvariants:
    def test_examples(self):
        s = state_from_invariants(DelaunayParams(3, 1.0), 0.0, 1.0, ascending=False)
        assert s.theta == 0.0 and s.x == 0.0 and s.t == 0.0
        s = state_from_invariants(DelaunayParams(3, 0.5), 0.5, 1.0)
        assert s.theta == 0.0
        with pytest.raises(NoSuchPoint):
            state_from_invariants(DelaunayParams(3, 1.0), 0.0, 2.0)

    @given(
        n=st.integers(3, 8),
        H=st.floats(-3, 3, allow_nan=False),
        y=st.floats(0.05, 3),
        theta=st.floats(-3.1, 3.1),
        asc=st.booleans(),
    )
    def test_round_trip(self, n, H, y, theta, asc):
        p = DelaunayParams(n, H)
        F = force(CurveState(0, y, theta), p)
        s = state_from_invariants(p, F, y, asc)
        assert math.cos(s.theta) == pytest.approx(math.cos(theta), abs=1e-12)
        assert (s.theta >= 0) == asc or s.theta == 0.0

    def test_heights_at_angle(self):
        p = DelaunayParams(4, 1.0)
        F = 0.5 * cylinder_force(4, 1.0)
        ys = heights_at_angle(p, F, 0.0)
        assert len(ys) == 2
        for y in ys:
            assert force(CurveState(0, y, 0.0), p) == pytest.approx(F, abs=1e-14)


class TestTrace:
    def test_quarter_circle(self):
        c = trace(CurveState(0, 1, 0), DelaunayParams(3, 1.0), StopSpec(length=3.0, axis=True))
        assert c.event == "axis"
        r = np.hypot(c.x, c.y)
        assert np.max(np.abs(r - 1)) < 1e-8
        end = c.end
        assert end.y == pytest.approx(1e-9, abs=1e-12)
        assert end.x == pytest.approx(1.0, abs=1e-8)
        # angle errors grow like 1/y toward the axis in the plain form
        assert end.theta == pytest.approx(-math.pi / 2, abs=1e-2)
        c = trace(CurveState(0, 1, 0), DelaunayParams(3, 1.0), StopSpec(length=3.0, axis=True), conserve_force=True)
        assert c.end.theta == pytest.approx(-math.pi / 2, abs=1e-8)

    def test_cylinder_segment(self):
        c = trace(CurveState(0, 1, 0), DelaunayParams(3, 0.5), StopSpec(length=5.0))
        assert (c.end.x, c.end.y, c.end.theta) == pytest.approx((5, 1, 0), abs=1e-12)
        assert c.cls is DelaunayClass.CYLINDER

    def test_hyperplane(self):
        c = trace(CurveState(0, 1, math.pi / 2), DelaunayParams(4, 0.0), StopSpec(length=3.0))
        assert c.end.x == pytest.approx(0, abs=1e-12)
        assert c.end.y == pytest.approx(4, abs=1e-12)
        assert c.cls is DelaunayClass.VERTICAL_HYPERPLANE

    def test_unduloid_period_drift(self):
        p = DelaunayParams(5, 1.0)
        y0 = heights_at_angle(p, 0.1, 0.0)[-1]
        c = trace(state_from_invariants(p, 0.1, y0), p, StopSpec(length=20.0))
        assert c.force == pytest.approx(0.1, abs=1e-14)
        assert c.force_drift() < 1e-8
        assert c.cls is DelaunayClass.UNDULOID_OR_CYLINDER

    def test_max_step_respected(self):
        c = trace(CurveState(0, 1, 0), DelaunayParams(3, 0.3), StopSpec(length=10.0, max_step=0.1))
        assert np.max(np.diff(c.t)) <= 0.1 + 1e-15

    def test_events(self):
        p = DelaunayParams(3, 1.0)
        s = CurveState(0, 1, 0)
        c = trace(s, p, StopSpec(length=10.0, angle=-0.5))
        assert c.event == "angle" and c.end.theta == pytest.approx(-0.5, abs=1e-10)
        c = trace(s, p, StopSpec(length=10.0, height=0.5))
        assert c.event == "height" and c.end.y == pytest.approx(0.5, abs=1e-10)
        c = trace(s, p, StopSpec(length=10.0, x_max=0.25))
        assert c.event == "x_max" and c.end.x == pytest.approx(0.25, abs=1e-10)
        c = trace(s, p, StopSpec(length=10.0, vertical=True))
        assert c.event == "vertical"
        assert abs(math.cos(c.end.theta)) < 1e-10

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            trace(CurveState(0, 0, 0), DelaunayParams(3, 1.0), StopSpec(length=1.0))
        with pytest.raises(DomainError):
            trace(CurveState(0, 1, 0), DelaunayParams(3, 1.0), StopSpec(length=math.inf))

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_sphere_radius(self, n):
        r = 2.5
        c = trace(CurveState(0, r, 0), DelaunayParams(n, 1 / r), StopSpec(length=10.0, axis=True), conserve_force=True)
        assert c.event == "axis"
        assert np.max(np.abs(np.hypot(c.x, c.y) - r)) < 1e-8


def _ddtheta_check(curve, ts):
    n, H, F = curve.params.n, curve.params.H, curve.force
    worst = 0.0

    def thdot(t):
        s = curve.state_at(t)
        return -(n - 1) * H + (n - 2) * math.cos(s.theta) / s.y

    for t in ts:
        s = curve.state_at(t)
        exact = evaluate_ode(s, curve.params)[3]
        h = 1e-3 * min(s.y, 1.0)
        fd = richardson(thdot, t, h)
        scale = max(abs(exact), (n - 1) * (n - 2) * abs(F) / s.y**n)
        worst = max(worst, abs(fd - exact) / scale)
    return worst


class TestProperties:
    def test_drift_and_ddtheta(self, rng):
        for _ in range(12):
            n = int(rng.integers(3, 9))
            p, s0 = unit_height_curve(rng, n)
            c = trace(s0, p, StopSpec(length=10.0))
            assert c.force_drift() < 1e-8
            ts = rng.uniform(0.1, c.length - 0.1, size=8)
            assert _ddtheta_check(c, ts) < 1e-6

    def test_unduloid_graph_nodoid_monotone(self, rng):
        for _ in range(12):
            n = int(rng.integers(3, 9))
            p, s0 = unit_height_curve(rng, n)
            c = trace(s0, p, StopSpec(length=10.0))
            if c.cls is DelaunayClass.UNDULOID_OR_CYLINDER:
                # a graph over the axis; leftward when H < 0
                cos = np.cos(c.theta) * math.copysign(1.0, p.H)
                assert np.all(cos > 0)
            else:
                assert c.cls is DelaunayClass.NODOID
                d = np.diff(c.theta)
                assert np.all(d < 0) or np.all(d > 0)

    @given(n=st.integers(3, 8), lam=st.floats(0.2, 5.0), u=st.floats(0.05, 0.95))
    def test_scaling_covariance(self, n, lam, u):
        p = DelaunayParams(n, 1.0)
        F = u * cylinder_force(n, 1.0)
        y0 = heights_at_angle(p, F, 0.0)[-1]
        a = trace(CurveState(0, y0, 0), p, StopSpec(length=4.0))
        q = DelaunayParams(n, 1.0 / lam)
        b = trace(CurveState(0, lam * y0, 0), q, StopSpec(length=4.0 * lam))
        assert b.force == pytest.approx(lam ** (n - 2) * a.force, rel=1e-12)
        end_a, end_b = a.end, b.end
        assert end_b.x == pytest.approx(lam * end_a.x, abs=1e-8 * lam)
        assert end_b.y == pytest.approx(lam * end_a.y, abs=1e-8 * lam)
        assert end_b.theta == pytest.approx(end_a.theta, abs=1e-8)

    def test_reverse_and_reflect_keep_invariants(self, rng):
        p, s0 = unit_height_curve(rng, 4)
        c = trace(s0, p, StopSpec(length=3.0))
        for d in (c.reversed(), c.reflected()):
            assert np.max(np.abs(d.forces() - d.force)) < 1e-8
