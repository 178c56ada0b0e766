"""Randomized checks of geometric facts about Delaunay curves.

Each ``check_*`` function tests one statement on one concrete curve piece and
returns a :class:`CheckResult`.  ``run_suite`` draws admissible pieces by
rejection sampling and tallies the outcomes per statement and dimension.

Strict inequalities are tested with a margin; outcomes within the margin are
reported as inconclusive rather than as failures.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .axis_map import axis_value
from .delaunay import (
    CurveState,
    DelaunayClass,
    DelaunayParams,
    GeneratingCurve,
    StopSpec,
    classify,
    cylinder_force,
    evaluate_ode,
    heights_at_angle,
    trace,
)
from .errors import DomainError, NoSuchPoint, PreconditionError
from .sampling import log_uniform

PASS, FAIL, INCONCLUSIVE, PRECONDITION = "pass", "fail", "inconclusive", "precondition"
LEFT, RIGHT = "left-inequality", "right-inequality"
THIRD = math.pi / 3
SIXTH = math.pi / 6
MARGIN = 1e-9  # ten times the integrator tolerance


@dataclass
class CheckResult:
    status: str
    detail: dict = field(default_factory=dict)
    witness: dict | None = None

    @property
    def passed(self):
        return self.status == PASS


# ------------------------------------------------------------------ ray


def check_undulary_ray(n, H, F, theta_p, psi, branch=0, x_shift=0.0, margin=MARGIN):
    """Ray from a rising unduloid point p, turned psi below the backward tangent.

    The ray must stay strictly below the curve on the whole stretch left of
    p down to where the ray meets the axis.  ``branch`` picks which of the
    (up to two) rising points with angle ``theta_p`` is used.
    """
    if not 0 < psi < math.pi / 4:
        raise PreconditionError(f"psi={psi} outside (0, pi/4)")
    if not math.pi / 2 - 2 * psi <= theta_p < math.pi / 2:
        raise PreconditionError(f"theta_p={theta_p} outside [pi/2 - 2 psi, pi/2)")
    params = DelaunayParams(n, H)
    if H <= 0 or classify(n, H, F) is not DelaunayClass.UNDULOID_OR_CYLINDER:
        raise PreconditionError(f"(H, F) = ({H}, {F}) is not a rightward unduloid")
    ys = heights_at_angle(params, F, theta_p)
    if not ys:
        raise PreconditionError(f"unduloid never reaches angle {theta_p}")
    y_p = ys[min(branch, len(ys) - 1)]
    x_p = x_shift
    direction = theta_p + math.pi + psi
    detail = {"x_p": x_p, "y_p": y_p, "direction": direction}
    if theta_p >= math.pi / 2 - psi:
        detail["reason"] = "ray heads right"
        return CheckResult(PASS, detail)
    cot = math.cos(direction) / math.sin(direction)
    x_hit = x_p - y_p * cot
    detail["x_hit"] = x_hit
    # follow the curve backwards from p until it is left of the ray's foot
    back = trace(
        CurveState(x_p, y_p, theta_p + math.pi),
        DelaunayParams(n, -H),
        StopSpec(length=50.0 * (x_p - x_hit + y_p), x_min=x_hit),
    )
    slope = math.tan(direction)
    gap = back.y - (y_p + (back.x - x_p) * slope)
    scale = y_p
    near = back.t < 100 * margin * scale / math.sin(psi)
    worst = int(np.argmin(np.where(near, np.inf, gap)))
    detail["min_gap"] = float(gap[worst]) if not near[worst] else None
    bad = np.nonzero(gap < -margin * scale)[0]
    if bad.size:
        i = int(bad[0])
        return CheckResult(FAIL, detail, {"x": float(back.x[i]), "y": float(back.y[i]), "gap": float(gap[i])})
    if np.any((~near) & (gap <= margin * scale)):
        return CheckResult(INCONCLUSIVE, detail)
    return CheckResult(PASS, detail)


# ---------------------------------------------------------------- chord


def _theta_ddot(curve):
    n, H, F = curve.params.n, curve.params.H, curve.force
    return -(n - 1) * (n - 2) * F * np.sin(curve.theta) / curve.y**n


def check_chord(segment: GeneratingCurve, margin=MARGIN, angle_tol=1e-12):
    """Line through q at angle theta_q - pi/6 lies above the segment p -> q."""
    th = segment.theta
    tp, tq = float(th[0]), float(th[-1])
    detail = {"theta_p": tp, "theta_q": tq}
    if not (tp <= tq <= tp + THIRD + angle_tol):
        detail["reason"] = "angle window"
        return CheckResult(PRECONDITION, detail)
    if np.any(th < tp - angle_tol) or np.any(th > tq + angle_tol):
        detail["reason"] = "theta leaves [theta_p, theta_q]"
        return CheckResult(PRECONDITION, detail)
    dd = _theta_ddot(segment)
    if np.any(dd >= 0):
        detail["reason"] = "theta'' >= 0"
        return CheckResult(PRECONDITION, detail)
    a = tq - SIXTH
    d = (math.cos(a), math.sin(a))
    qx, qy = float(segment.x[-1]), float(segment.y[-1])
    vx, vy = segment.x[:-1] - qx, segment.y[:-1] - qy
    dist = np.hypot(vx, vy)
    # sine of the angle from the line to each point, seen from q
    s = (d[0] * vy - d[1] * vx) / np.where(dist > 0, dist, 1.0)
    worst = int(np.argmax(s))
    detail["max_sine"] = float(s[worst])
    if s[worst] > margin:
        return CheckResult(FAIL, detail, {"x": float(segment.x[worst]), "y": float(segment.y[worst])})
    if s[worst] >= -margin:
        return CheckResult(INCONCLUSIVE, detail)
    return CheckResult(PASS, detail)


# ------------------------------------------------------------ companions


def companion_tangents(theta_p, theta_q):
    """Outgoing tangents of the arcs sharing p and q with the segment.

    At p the segment leaves at theta_p; the upper companion leaves at
    theta_p + 2pi/3 and the lower at theta_p - 2pi/3.  At q the segment
    arrives at theta_q; the upper companion leaves at theta_q + pi/3 and the
    lower at theta_q - pi/3.
    """
    return {
        "p_upper": theta_p + 2 * THIRD,
        "p_lower": theta_p - 2 * THIRD,
        "q_upper": theta_q + THIRD,
        "q_lower": theta_q - THIRD,
    }


def _normalized(th, ref):
    # shift the unwrapped angles by a multiple of 2pi so that th[ref] is in [-pi, pi)
    k = math.floor((th[ref] + math.pi) / (2 * math.pi))
    return th - 2 * math.pi * k


def _companion_preconditions(segment, side, angle_tol=1e-12):
    if side == LEFT:
        th = _normalized(segment.theta, 0)
        tp, tq = float(th[0]), float(th[-1])
        if segment.cls not in (DelaunayClass.UNDULOID_OR_CYLINDER, DelaunayClass.NODOID):
            raise PreconditionError(f"segment is {segment.cls}, not an unduloid or nodoid")
        if not (np.all(np.diff(segment.x) > 0) and np.all(np.diff(segment.y) > 0)):
            raise PreconditionError("segment is not strictly increasing left to right")
        if not 0 <= tp < math.pi / 2:
            raise PreconditionError(f"theta(p)={tp} outside [0, pi/2)")
        if not max(SIXTH, tp) < tq <= min(math.pi / 2, tp + THIRD) + angle_tol:
            raise PreconditionError(f"theta(q)={tq} outside (max(pi/6, theta_p), min(pi/2, theta_p + pi/3)]")
    elif side == RIGHT:
        th = _normalized(segment.theta, -1)
        tp, tq = float(th[0]), float(th[-1])
        if not SIXTH <= tq < math.pi / 2:
            raise PreconditionError(f"theta(q)={tq} outside [pi/6, pi/2)")
        if not SIXTH <= tp <= tq + THIRD + angle_tol:
            raise PreconditionError(f"theta(p)={tp} outside [pi/6, theta_q + pi/3]")
        if np.any(np.abs(th) >= math.pi):
            raise PreconditionError("theta reaches pi mod 2pi between p and q")
    else:
        raise DomainError(f"side must be {LEFT!r} or {RIGHT!r}, got {side!r}")
    return tp, tq


def companion_axis_points(segment, tp, tq):
    p, q = segment.start, segment.end
    tan = companion_tangents(tp, tq)
    return {
        "f1_p": axis_value(p.x, p.y, tan["p_lower"]),
        "f2_p": axis_value(p.x, p.y, tan["p_upper"]),
        "f4_q": axis_value(q.x, q.y, tan["q_upper"]),
        "f5_q": axis_value(q.x, q.y, tan["q_lower"]),
    }


def check_companions(segment: GeneratingCurve, side: str, margin=MARGIN):
    """Compare the companion arcs' axis points at p and q.

    left-inequality:  f4(q) < f2(p) for a rising piece turning upward.
    right-inequality: f5(q) > f1(p) for a piece arriving at q from the left.
    """
    tp, tq = _companion_preconditions(segment, side)
    pts = companion_axis_points(segment, tp, tq)
    scale = max(float(segment.y[0]), float(segment.y[-1]))
    if side == LEFT:
        a, b = pts["f4_q"], pts["f2_p"]
    else:
        a, b = pts["f1_p"], pts["f5_q"]
    gap = b - a  # must be > 0
    detail = dict(pts, theta_p=tp, theta_q=tq, gap=gap)
    if math.isinf(a) or math.isinf(b):
        # an endpoint at infinity: only the limits from the correct side count
        ok = (a == -math.inf) or (b == math.inf)
        return CheckResult(PASS if ok else FAIL, detail, None if ok else dict(pts))
    if gap < -margin * scale:
        return CheckResult(FAIL, detail, dict(pts))
    if gap <= margin * scale:
        return CheckResult(INCONCLUSIVE, detail)
    return CheckResult(PASS, detail)


# ------------------------------------------------------------ cap spread


def cap_spread(y, phi):
    """Horizontal spread between axis feet of lines dropped at phi and phi + pi/3 from vertical."""
    if not y > 0:
        raise DomainError(f"height must be positive, got {y!r}")
    if not 0 <= phi < SIXTH:
        raise DomainError(f"phi must lie in [0, pi/6), got {phi!r}")
    return y * (math.tan(phi + THIRD) - math.tan(phi))


def cap_spread_identity(y, phi):
    return y * math.tan(THIRD) / (0.5 + math.cos(2 * phi + THIRD))


# --------------------------------------------------------------- samplers


def _rand_H(rng, sign=None):
    H = log_uniform(rng, 0.1, 10.0)
    if sign is None:
        sign = 1 if rng.uniform() < 0.5 else -1
    return sign * H


def sample_ray(rng, n, x_shift=0.0):
    H = _rand_H(rng, 1)
    psi = rng.uniform(0.0, math.pi / 4)
    theta_p = rng.uniform(math.pi / 2 - 2 * psi, math.pi / 2)
    # a point (y, theta_p) with 0 < H y < cos(theta_p) lies on an unduloid
    y = rng.uniform(0.0, 1.0) * math.cos(theta_p) / H
    F = y ** (n - 2) * (math.cos(theta_p) - H * y)
    branch = int(rng.integers(0, 2))
    args = dict(n=n, H=H, F=F, theta_p=theta_p, psi=psi, branch=branch)
    if not (y > 0 and F > 0):
        return args, None
    try:
        return args, check_undulary_ray(**args, x_shift=x_shift)
    except PreconditionError:
        return args, None


def _random_state(rng, n, theta, x_shift):
    y = log_uniform(rng, 0.1, 10.0)
    H = _rand_H(rng) / y
    return CurveState(x_shift, y, theta), DelaunayParams(n, H)


def _theta_dot(state, params):
    return -(params.n - 1) * params.H + (params.n - 2) * math.cos(state.theta) / state.y


def _forward_piece(state, params, target):
    length = 10.0 * min(state.y, 1.0 / abs(params.H))
    return trace(state, params, StopSpec(length=length, angle=target))


def _backward_piece(state, params, target):
    """Piece ending at ``state`` and starting where the angle first equals ``target``."""
    length = 10.0 * min(state.y, 1.0 / abs(params.H))
    back = trace(
        CurveState(state.x, state.y, state.theta + math.pi),
        DelaunayParams(params.n, -params.H),
        StopSpec(length=length, angle=target + math.pi),
    )
    return back


def _args(state, params, **kw):
    return dict(n=params.n, H=params.H, y=state.y, theta=state.theta, **kw)


def sample_chord(rng, n, x_shift=0.0):
    tp = rng.uniform(-math.pi, math.pi)
    tq = tp + rng.uniform(0.0, 1.0) * THIRD
    s, params = _random_state(rng, n, tp, x_shift)
    args = _args(s, params, theta_q=tq)
    F = s.y ** (n - 2) * (math.cos(tp) - params.H * s.y)
    # cheap rejections: the angle must rise and theta'' = -c F sin(theta) must be negative
    if _theta_dot(s, params) <= 0 or F * math.sin(tp) <= 0:
        return args, None
    seg = _forward_piece(s, params, tq)
    if seg.event != "angle":
        return args, None
    return args, check_chord(seg)


def sample_left(rng, n, x_shift=0.0):
    tp = rng.uniform(0.0, math.pi / 2)
    lo, hi = max(SIXTH, tp), min(math.pi / 2, tp + THIRD)
    if not lo < hi:
        return {"theta_p": tp}, None
    tq = rng.uniform(lo, hi)
    s, params = _random_state(rng, n, tp, x_shift)
    args = _args(s, params, theta_q=tq)
    if _theta_dot(s, params) <= 0:
        return args, None
    seg = _forward_piece(s, params, tq)
    if seg.event != "angle":
        return args, None
    return args, check_companions(seg, LEFT)


def sample_right(rng, n, x_shift=0.0):
    tq = rng.uniform(SIXTH, math.pi / 2)
    s, params = _random_state(rng, n, tq, x_shift)
    rate = _theta_dot(s, params)
    # walking back from q the angle moves against theta'(q)
    tp = rng.uniform(SIXTH, tq) if rate > 0 else rng.uniform(tq, tq + THIRD)
    args = _args(s, params, theta_p=tp)
    if rate == 0:
        return args, None
    back = _backward_piece(s, params, tp)
    if back.event != "angle":
        return args, None
    return args, check_companions(back.reversed(), RIGHT)


SAMPLERS = {
    "undulary-ray": sample_ray,
    "chord-line": sample_chord,
    "companion-left": sample_left,
    "companion-right": sample_right,
}
LEMMA_IDS = tuple(SAMPLERS) + ("cap-spread",)


# ------------------------------------------------------------------ suite


@dataclass
class LemmaReport:
    lemma: str
    n: int | None
    seed: int
    attempted: int = 0
    admissible: int = 0
    passed: int = 0
    inconclusive: int = 0
    failed: int = 0
    tolerance: float = MARGIN
    counterexample: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.failed == 0

    def to_dict(self):
        return asdict(self)


def _attempt(lemma, seed, n, i):
    rng = np.random.default_rng([seed, LEMMA_IDS.index(lemma), n, i])
    try:
        args, res = SAMPLERS[lemma](rng, n)
    except (PreconditionError, NoSuchPoint):
        return None
    if res is None or res.status == PRECONDITION:
        return None
    return i, args, res


def _batch(job):
    lemma, seed, n, lo, hi = job
    return [r for r in (_attempt(lemma, seed, n, i) for i in range(lo, hi)) if r is not None]


def run_lemma(lemma, n, seed, samples, max_attempts=None, workers=1, batch=250):
    """Tally one sampled statement in one dimension."""
    if samples < 1:
        raise DomainError("samples per lemma must be at least 1")
    max_attempts = max_attempts or 100 * samples
    rep = LemmaReport(lemma, n, seed)
    results = []
    lo = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while len(results) < samples and lo < max_attempts:
            width = batch * (workers if pool else 1)
            jobs = [(lemma, seed, n, a, min(a + batch, max_attempts)) for a in range(lo, min(lo + width, max_attempts), batch)]
            outs = pool.map(_batch, jobs) if pool else map(_batch, jobs)
            for out in outs:
                results.extend(out)
            lo = jobs[-1][4]
    finally:
        if pool:
            pool.shutdown()
    results = results[:samples]
    rep.attempted = (results[-1][0] + 1) if len(results) == samples else lo
    rep.admissible = len(results)
    for i, args, res in results:
        if res.status == PASS:
            rep.passed += 1
        elif res.status == INCONCLUSIVE:
            rep.inconclusive += 1
        else:
            rep.failed += 1
            if rep.counterexample is None:
                rep.counterexample = {"index": i, "args": args, "detail": res.detail, "witness": res.witness}
    return rep


def cap_spread_report(seed=0, tol=1e-12):
    """Identity residual and monotonicity of cap_spread on the fixed grid."""
    phis = np.linspace(0.0, SIXTH - 1e-3, 51)
    ys = (0.1, 1.0, 10.0)
    rep = LemmaReport("cap-spread", None, seed, tolerance=tol)
    worst = 0.0
    grid = np.empty((len(ys), len(phis)))
    for a, y in enumerate(ys):
        for b, phi in enumerate(phis):
            v = cap_spread(y, float(phi))
            ident = cap_spread_identity(y, float(phi))
            worst = max(worst, abs(v - ident) / abs(ident))
            grid[a, b] = v
    rep.attempted = rep.admissible = grid.size
    mono_phi = bool(np.all(np.diff(grid, axis=1) > 0))
    mono_y = bool(np.all(np.diff(grid, axis=0) > 0))
    rep.passed = grid.size if (worst < tol and mono_phi and mono_y) else 0
    rep.failed = grid.size - rep.passed
    rep.extra = {"identity_residual": worst, "increasing_in_phi": mono_phi, "increasing_in_y": mono_y}
    if rep.failed:
        rep.counterexample = dict(rep.extra)
    return rep


def run_suite(seed, n_range=range(3, 9), samples_per_lemma=1000, tol=MARGIN, workers=1, lemmas=None):
    """All sampled statements for every n, plus the cap-spread grid."""
    if samples_per_lemma < 1:
        raise DomainError("samples per lemma must be at least 1")
    reports = []
    for lemma in lemmas or SAMPLERS:
        for n in n_range:
            rep = run_lemma(lemma, int(n), seed, samples_per_lemma, workers=workers)
            rep.tolerance = tol
            reports.append(rep)
    reports.append(cap_spread_report(seed))
    return reports
