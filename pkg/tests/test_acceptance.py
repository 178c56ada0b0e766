"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also collected in the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from dbubble.axis_map import TWICE_VERTICAL, ArcComplex, axis_rate, axis_value, separating_audit
from dbubble.cli import main
from dbubble.config import ConfigTree, RealizeSpec, audit, realize
from dbubble.delaunay import (
    CurveState,
    DelaunayParams,
    StopSpec,
    force,
    heights_at_angle,
    state_from_invariants,
    trace,
)
from dbubble.junctions import junction_residual
from dbubble.lemmas import run_suite
from dbubble.sampling import random_junction, unit_height_curve
from dbubble.standard import (
    cap_measures,
    cap_monte_carlo,
    equal_volume_oracle,
    solve_standard,
    unit_ball_volume,
    unit_sphere_area,
)

from conftest import record, richardson

RATIOS = (1.0, 1.5, 2.0, 10.0, 100.0)


@pytest.fixture(scope="module")
def random_traces():
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(100):
        n = int(rng.integers(3, 9))
        p, s0 = unit_height_curve(rng, n)
        out.append((p, s0, trace(s0, p, StopSpec(length=10.0))))
    return out


def test_ac01_sphere_reproduction():
    t0 = time.perf_counter()
    c = trace(CurveState(0.0, 1.0, 0.0), DelaunayParams(3, 1.0), StopSpec(length=10.0, axis=True))
    dt = time.perf_counter() - t0
    ts = np.linspace(c.t[0], c.t[-1], 2001)
    pts = np.array([[s.x, s.y] for s in map(c.state_at, ts)])
    # exact: x = sin t, y = cos t
    err = max(np.max(np.hypot(pts[:, 0] - np.sin(ts), pts[:, 1] - np.cos(ts))), np.max(np.abs(np.hypot(c.x, c.y) - 1)))
    ok = c.event == "axis" and err < 1e-8 and dt < 1.0
    assert record("AC01 sphere reproduction", ok, f"sup error {err:.2e} (< 1e-08), {dt:.3f} s (< 1 s), event {c.event}")


def test_ac02_force_conservation(random_traces):
    worst = 0.0
    for p, s0, c in random_traces:
        worst = max(worst, float(np.max(np.abs(c.forces() - force(s0, p)))))
    assert record("AC02 force conservation", worst < 1e-8, f"max |F(t) - F(0)| = {worst:.2e} over 100 traces (< 1e-08)")


def test_ac03_theta_second_derivative(random_traces):
    rng = np.random.default_rng(3)
    worst = 0.0
    for p, _, c in random_traces:
        n, H, F = p.n, p.H, c.force

        def thdot(t):
            s = c.state_at(t)
            return -(n - 1) * H + (n - 2) * math.cos(s.theta) / s.y

        for t in rng.uniform(0.05, c.length - 0.05, size=5):
            s = c.state_at(t)
            exact = -(n - 1) * (n - 2) * F * math.sin(s.theta) / s.y**n
            env = (n - 1) * (n - 2) * abs(F) / s.y**n
            fd = richardson(thdot, t, 1e-3 * min(s.y, 1.0))
            worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-3 * env))
    assert record("AC03 theta'' identity", worst < 1e-6, f"max relative error {worst:.2e} (< 1e-06), 500 points")


def test_ac04_axis_map_derivative(random_traces):
    rng = np.random.default_rng(4)
    worst, signs, count = 0.0, True, 0
    for p, _, c in random_traces:
        for t in rng.uniform(0.05, c.length - 0.05, size=5):
            s = c.state_at(t)
            cos = math.cos(s.theta)
            if abs(cos) < 0.1:
                continue
            # the law with the force of the state itself; the curve's F differs by its drift
            exact = axis_rate(s, p)

            def f(u):
                q = c.state_at(u)
                return axis_value(q.x, q.y, q.theta)

            fd = richardson(f, t, 1e-3 * min(s.y, 1.0) * abs(cos))
            worst = max(worst, abs(fd - exact) / abs(exact))
            signs &= bool(np.sign(fd) == np.sign(c.force) == np.sign(exact))
            count += 1
    ok = worst < 1e-6 and signs
    assert record("AC04 f-derivative law", ok, f"max relative error {worst:.2e} (< 1e-06), signs agree: {signs}, {count} points")


def test_ac05_force_balancing():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(10_000):
        n = 3 + i % 6
        v = random_junction(rng, n)
        assert abs(sum(inc.H for inc in v.incident)) < 1e-12
        worst = max(worst, junction_residual(v, n)[2])
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 5.0
    assert record("AC05 force balancing", ok, f"max |sum F| = {worst:.2e} (< 1e-10), {dt:.2f} s (< 5 s)")


def test_ac06_standard_equal_volumes():
    r, rim, area = equal_volume_oracle(1.0)
    # the oracle itself, by independent quadrature: outer caps span 2pi/3
    a_cap, v_cap = cap_measures(3, r, 2 * math.pi / 3)
    oracle_err = max(abs(v_cap - 1.0), abs(2 * a_cap + math.pi * rim**2 - area) / area, abs(r**3 * 9 * math.pi / 8 - 1))
    b = solve_standard(3, 1.0, 1.0)
    err = max(
        abs(b.left.r - r) / r, abs(b.right.r - r) / r, abs(b.rho - rim) / rim, abs(b.total_area - area) / area,
    )
    ok = oracle_err < 1e-12 and err < 1e-8 and b.flat_interface
    assert record(
        "AC06 standard bubble, equal volumes", ok,
        f"relative error {err:.2e} (< 1e-08), flat {b.flat_interface}, oracle check {oracle_err:.1e}",
    )


def test_ac07_standard_properties():
    worst_cocycle, worst_scale, slowest, order = 0.0, 0.0, 0.0, True
    for n in range(3, 9):
        for q in RATIOS:
            t0 = time.perf_counter()
            b = solve_standard(n, 1.0, q)
            slowest = max(slowest, time.perf_counter() - t0)
            worst_cocycle = max(worst_cocycle, b.curvature_cocycle_residual())
            if q > 1:
                order &= b.pressures.H1 > b.pressures.H2
            s = solve_standard(n, 2.0**n, 2.0**n * q)
            worst_scale = max(
                worst_scale, abs(s.rho - 2 * b.rho) / b.rho, abs(s.total_area - 2 ** (n - 1) * b.total_area) / s.total_area
            )
    ok = worst_cocycle < 1e-9 and worst_scale < 1e-8 and order and slowest < 2.0
    assert record(
        "AC07 standard bubble properties", ok,
        f"cocycle {worst_cocycle:.1e} (< 1e-09), scaling {worst_scale:.1e}, smaller region higher pressure: {order}, "
        f"slowest solve {slowest:.2f} s (< 2 s)",
    )


def test_ac08_cap_quadrature():
    worst = 0.0
    for n in range(3, 11):
        r = 1.3
        a, v = cap_measures(n, r, math.pi)
        worst = max(
            worst,
            abs(a - unit_sphere_area(n - 1) * r ** (n - 1)) / a,
            abs(v - unit_ball_volume(n) * r**n) / v,
        )
    rng = np.random.default_rng(8)
    z = 0.0
    for n, r, alpha in ((3, 1.0, 1.2), (5, 0.7, 2.5), (8, 2.0, 0.6)):
        (ma, sa), (mv, sv) = cap_monte_carlo(n, r, alpha, 10_000_000, rng)
        qa, qv = cap_measures(n, r, alpha)
        z = max(z, abs(ma - qa) / sa, abs(mv - qv) / sv)
    ok = worst < 1e-12 and z < 4.0
    assert record("AC08 cap quadrature", ok, f"closed-form error {worst:.1e} (< 1e-12), Monte Carlo max |z| = {z:.2f} (< 4)")


def test_ac09_lemma_suite():
    t0 = time.perf_counter()
    reports = run_suite(seed=0, samples_per_lemma=1000)
    dt = time.perf_counter() - t0
    failed = sum(r.failed for r in reports)
    short = [r.lemma for r in reports if r.n is not None and r.admissible < 1000]
    spread = next(r for r in reports if r.lemma == "cap-spread").extra
    ok = failed == 0 and not short and spread["identity_residual"] < 1e-12 and dt < 300
    assert record(
        "AC09 lemma suite", ok,
        f"{failed} counterexamples, {len(reports) - 1} sampled (lemma, n) runs at 1000 each, "
        f"identity residual {spread['identity_residual']:.1e}, {dt:.0f} s (< 300 s)",
    )


def test_ac10_audit_negative_control():
    tree = ConfigTree([{"id": "R", "region": 1}])
    found = {}
    for n, q in [(3, 1.0)] + [(n, 2.0) for n in range(3, 9)]:
        rep = audit(realize(RealizeSpec(tree, n, volumes=(1.0, q))))
        found[(n, q)] = len(rep.findings)
    ok = not any(found.values())
    assert record("AC10 audit negative control", ok, f"violations on standard bubbles: {sum(found.values())} over {len(found)} cases")


def test_ac11_audit_positive_control():
    p = DelaunayParams(3, 1.0)
    y0 = heights_at_angle(p, -0.5, 0.0)[-1]
    loop = trace(state_from_invariants(p, -0.5, y0, ascending=False), p, StopSpec(length=6.0))
    verticals = int(np.sum(np.diff(np.sign(np.cos(loop.theta))) != 0))
    rep = separating_audit(ArcComplex({"nodoid": loop}, {"nodoid": ("v", "w")}))
    ok = TWICE_VERTICAL in rep.rules()
    assert record(
        "AC11 audit positive control", ok,
        f"nodoid loop with {verticals} vertical points flagged {rep.rules()} at default resolution {rep.resolution}",
    )


def test_ac12_determinism(tmp_path, capsys):
    argvs = (
        ["verify", "--suite", "lemmas", "--samples", "10", "--seed", "1", "--out", str(tmp_path / "report.json")],
        ["standard", "--dim", "3", "--v1", "1", "--v2", "2", "--out", str(tmp_path / "b.json")],
        ["audit", "--config", str(tmp_path / "b.json"), "--resolution", "0.05", "--out", str(tmp_path / "audit.json")],
    )
    runs = []
    for _ in range(2):
        codes = tuple(main(a) for a in argvs)
        runs.append((codes, [(tmp_path / f).read_bytes() for f in ("report.json", "b.json", "audit.json")]))
    capsys.readouterr()
    same = runs[0] == runs[1]
    ok = same and runs[0][0] == (0, 0, 0)
    assert record("AC12 determinism", ok, f"verify/standard/audit JSON byte-identical on rerun: {same}, exit codes {runs[0][0]}")
    assert json.loads(runs[0][1][0])["counterexamples"] == 0
