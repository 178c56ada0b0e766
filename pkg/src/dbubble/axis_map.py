"""The normal-to-axis map f and what it tells us about a configuration.

f sends a curve point to the place where its normal line meets the axis,
f = x + y tan(theta), with every vertical tangent sent to the single point at
infinity.  Along a curve df/dt = (n-1) F / (y^(n-2) cos^2 theta), so f winds
monotonically around the circle L + {inf} in the direction sign(F).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .delaunay import DelaunayClass, GeneratingCurve
from .errors import MalformedVertex, ResolutionError

VERTICAL_TOL = 1e-10


@dataclass(frozen=True)
class AxisPoint:
    """A point of the compactified axis; +inf and -inf are the same point."""

    value: float

    def __post_init__(self):
        if math.isnan(self.value):
            raise ValueError("axis point cannot be NaN")
        if math.isinf(self.value) and self.value < 0:
            object.__setattr__(self, "value", math.inf)

    @classmethod
    def finite(cls, x):
        return cls(float(x))

    @property
    def is_infinite(self):
        return math.isinf(self.value)

    def __str__(self):
        return "inf" if self.is_infinite else repr(self.value)


INFINITY = AxisPoint(math.inf)


def axis_value(x, y, theta, vertical_tol=VERTICAL_TOL):
    """f as a float, inf at vertical tangents."""
    c = math.cos(theta)
    if abs(c) <= vertical_tol:
        return math.inf
    return x + y * math.sin(theta) / c


def axis_point(state, vertical_tol=VERTICAL_TOL) -> AxisPoint:
    return AxisPoint(axis_value(state.x, state.y, state.theta, vertical_tol))


def _invariant_cos(curve, y):
    # cos(theta) rebuilt from (H, F): no cancellation where the trace is steep
    n, H = curve.params.n, curve.params.H
    return curve.force * y ** (2.0 - n) + H * y


def axis_values(curve: GeneratingCurve, vertical_tol=VERTICAL_TOL):
    """f at every stored state of ``curve`` (inf where vertical)."""
    c = np.cos(curve.theta)
    d = _invariant_cos(curve, curve.y)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = curve.x + curve.y * np.sin(curve.theta) / d
    f[(np.abs(c) <= vertical_tol) | (np.sign(d) != np.sign(c))] = np.inf
    return f


def axis_rate(state, params):
    """df/dt = (n-1) F / (y^(n-2) cos^2 theta) at a non-vertical state."""
    n, H = params.n, params.H
    c = math.cos(state.theta)
    F = state.y ** (n - 2) * (c - H * state.y)
    return (n - 1) * F / (state.y ** (n - 2) * c * c)


def vertical_limit(theta_dot):
    """Limit of f when leaving a vertical tangent whose angle changes at ``theta_dot``.

    tan runs from +inf to -inf through its pole, so an increasing angle gives
    -inf.  A straight vertical line (zero rate) counts as +inf.
    """
    return -math.inf if theta_dot > 0 else math.inf


@dataclass
class AxisProfile:
    """f sampled along a curve, split into monotone pieces at vertical points.

    ``segments`` holds (i0, i1, direction) index ranges of stored states with
    no vertical crossing inside; direction is sign(F) (0 for circles and
    vertical lines, where f is constant).
    """

    curve: GeneratingCurve
    t: np.ndarray
    f: np.ndarray
    segments: list = field(default_factory=list)

    @property
    def direction(self):
        F = self.curve.force
        scale = max(float(np.max(self.curve.y)), 1e-300) ** (self.curve.params.n - 2)
        if abs(F) <= 1e-12 * scale:
            return 0
        return 1 if F > 0 else -1

    def samples(self):
        return [(float(t), AxisPoint(float(v))) for t, v in zip(self.t, self.f)]


def axis_profile(curve: GeneratingCurve, vertical_tol=VERTICAL_TOL) -> AxisProfile:
    f = axis_values(curve, vertical_tol)
    c = np.cos(curve.theta)
    prof = AxisProfile(curve, curve.t.copy(), f)
    d = prof.direction
    start = 0
    for i in range(len(c) - 1):
        if abs(c[i + 1]) <= vertical_tol:
            prof.segments.append((start, i + 1, d))
            start = i + 1
        elif abs(c[i]) > vertical_tol and (c[i] > 0) != (c[i + 1] > 0):
            # the pole lies strictly inside this sample interval
            if i > start:
                prof.segments.append((start, i, d))
            start = i + 1
    if start < len(c) - 1 or not prof.segments:
        prof.segments.append((start, len(c) - 1, d))
    return prof


def _state_f(curve, t):
    s = curve.state_at(t)
    c = math.cos(s.theta)
    d = _invariant_cos(curve, s.y)
    if abs(c) <= VERTICAL_TOL or (d > 0) != (c > 0):
        return math.inf
    return s.x + s.y * math.sin(s.theta) / d


def preimages(profile: AxisProfile, x: float, tol=1e-12):
    """Arc-length parameters t where f(t) = x (finite x).

    Root-finds inside each sample interval bracketing x on a monotone piece;
    sample intervals that straddle a vertical point are handled by the
    infinite preimage instead.
    """
    out = []
    f, t = profile.f, profile.t
    if math.isinf(x):
        c = np.cos(profile.curve.theta)
        for i in range(len(c) - 1):
            if abs(c[i]) <= VERTICAL_TOL:
                out.append(float(t[i]))
            elif abs(c[i + 1]) > VERTICAL_TOL and (c[i] > 0) != (c[i + 1] > 0):
                th = profile.curve
                out.append(brentq(lambda s: math.cos(th.state_at(s).theta), t[i], t[i + 1], xtol=tol))
        if abs(c[-1]) <= VERTICAL_TOL:
            out.append(float(t[-1]))
        return out
    c = np.cos(profile.curve.theta)
    for i0, i1, _ in profile.segments:
        for i in range(i0, i1):
            a, b = f[i] - x, f[i + 1] - x
            if not (math.isfinite(a) and math.isfinite(b)) or (c[i] > 0) != (c[i + 1] > 0):
                continue
            if a == 0.0:
                out.append(float(t[i]))
            elif (a < 0) != (b < 0) and b != 0.0:
                out.append(brentq(lambda s: _state_f(profile.curve, s) - x, t[i], t[i + 1], xtol=tol))
        if i1 == len(t) - 1 and f[i1] - x == 0.0:
            out.append(float(t[i1]))
    return sorted(set(out))


def is_sphere_centered(curve: GeneratingCurve, x: float, tol=1e-7):
    """True when ``curve`` is a circle arc centred at axis point ``x``."""
    if curve.cls is not DelaunayClass.SPHERE:
        return False
    H = curve.params.H
    # on a circle cos(theta) = H y, so f = x + sin(theta) / H with no pole
    centre = curve.x + np.sin(curve.theta) / H
    return bool(np.all(np.abs(centre - x) <= tol * max(1.0, 1.0 / abs(H))))


# ---------------------------------------------------------------- notches

# outgoing tangents (outer, lower, upper) of a vertex in the all-graphs position
REFERENCE = {
    "left": {"outer": math.pi, "lower": -math.pi / 3, "upper": math.pi / 3},
    "right": {"outer": 0.0, "lower": -2 * math.pi / 3, "upper": 2 * math.pi / 3},
}
ROLES = ("outer", "lower", "upper")


def _wrap(a):
    r = math.remainder(a, 2 * math.pi)
    return math.pi if r == -math.pi else r


def notch_rotation(side, tangents):
    """Counterclockwise rotation of the vertex from its reference position.

    ``tangents`` maps role -> outgoing tangent angle.  Returns the rotation in
    (-5pi/6, 7pi/6] and the largest deviation from a rigid rotation.
    """
    ref = REFERENCE[side]
    devs = [_wrap(tangents[r] - ref[r]) for r in ROLES]
    base = devs[0]
    spread = max(abs(_wrap(d - base)) for d in devs)
    rot = base + math.fsum(_wrap(d - base) for d in devs) / 3
    rot = _wrap(rot)
    if rot <= -5 * math.pi / 6 + 1e-15:
        rot += 2 * math.pi
    return rot, spread


def vertex_notch(vertex, side=None, angle_tol=1e-9, f_limit=None):
    """Rotation notch m in {-2, ..., 3} of a labelled vertex.

    ``vertex`` is a VertexGeometry whose incidences carry roles in their
    ``arc`` names (outer/lower/upper) or a mapping role -> tangent.  When the
    rotation sits on a notch boundary some arc is vertical; ``f_limit`` is the
    limiting f along it (+inf or a vertical line picks the smaller notch).
    """
    if isinstance(vertex, dict):
        tangents = dict(vertex)
    else:
        tangents = {inc.arc: inc.theta for inc in vertex.incident}
    if set(tangents) != set(ROLES):
        raise MalformedVertex(f"notch needs roles {ROLES}, got {sorted(tangents)}")
    if side is None:
        side = getattr(vertex, "side", None) or "left"
    rot, spread = notch_rotation(side, tangents)
    if spread > angle_tol:
        raise MalformedVertex(f"tangents are not mutually 120 degrees (off by {spread:.3g})")
    k = rot / (math.pi / 3)
    lower = math.floor(k + 0.5)
    frac = k + 0.5 - lower
    if min(frac, 1 - frac) * (math.pi / 3) <= angle_tol:
        # on the boundary between notches round(k - 0.5) and round(k + 0.5)
        lo = int(round(k - 0.5))
        if f_limit is None:
            raise MalformedVertex("vertex sits on a notch boundary; the limiting f is needed")
        m = lo if f_limit > 0 else lo + 1
    else:
        m = int(lower)
    if m > 3:
        m -= 6
    if m < -2:
        m += 6
    return m


# ------------------------------------------------------- separating audit

DEFAULT_RESOLUTION = 0.05
ENDPOINT_VERTICAL_TOL = 1e-7
MAX_CUT = 4

DOWNWARD_PAIR = "downward-vertical-internal-pair"
TWICE_VERTICAL = "twice-vertical"
CROSS_ARC = "cross-arc-separating"


@dataclass
class ArcComplex:
    """Arcs plus the node at each end; ``None`` marks a free end on the axis.

    ``ends[name] = (start_node, finish_node)``.  Arcs that share a node name
    are joined there.
    """

    arcs: dict
    ends: dict

    def __post_init__(self):
        missing = set(self.arcs) ^ set(self.ends)
        if missing:
            raise ValueError(f"arcs and ends disagree on {sorted(missing)}")

    def nodes(self, name):
        a, b = self.ends[name]
        return (a if a is not None else ("free", name, 0), b if b is not None else ("free", name, 1))

    def extent(self):
        xs = np.concatenate([c.x for c in self.arcs.values()])
        ys = np.concatenate([c.y for c in self.arcs.values()])
        return max(float(np.ptp(xs)), float(np.max(ys)), 1e-300)

    def pieces_after_cut(self, cuts):
        """Connected pieces of the complex after removing points.

        ``cuts`` maps arc name -> number of removed interior points.  An arc
        cut k >= 1 times drops out of the node graph and leaves k - 1 loose
        middle pieces; its end pieces stay attached to their nodes.
        """
        parent = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        loose = 0
        for name in self.arcs:
            u, v = self.nodes(name)
            find(u), find(v)
            k = cuts.get(name, 0)
            if k == 0:
                parent[find(u)] = find(v)
            else:
                loose += k - 1
        return len({find(a) for a in parent}) + loose


@dataclass(frozen=True)
class Finding:
    rule: str
    arcs: tuple
    x: AxisPoint
    witness: tuple
    detail: str = ""

    def to_dict(self):
        return {
            "rule": self.rule,
            "arcs": list(self.arcs),
            "x": str(self.x),
            "witness": [list(w) for w in self.witness],
            "detail": self.detail,
        }


@dataclass
class Candidate:
    x: AxisPoint
    preimages: dict
    exempt: tuple
    separating: bool


@dataclass
class AuditReport:
    resolution: float
    candidates: list
    findings: list
    exemptions: list

    @property
    def violations(self):
        return self.findings

    @property
    def ok(self):
        return not self.findings

    def rules(self):
        return sorted({f.rule for f in self.findings})

    def to_dict(self):
        return {
            "resolution": self.resolution,
            "candidates": len(self.candidates),
            "separating_candidates": sum(c.separating for c in self.candidates),
            "exemptions": [[a, str(x)] for a, x in self.exemptions],
            "findings": [f.to_dict() for f in self.findings],
        }


def _as_complex(config):
    if isinstance(config, ArcComplex):
        return config
    if hasattr(config, "arc_complex"):
        return config.arc_complex()
    raise TypeError(f"cannot audit {type(config).__name__}")


def _vertical_points(curve, profile):
    """Interior vertical parameters and the count of vertical endpoints."""
    t0, t1 = curve.t[0], curve.t[-1]
    pad = 1e-9 * max(curve.length, 1e-300)
    inner = [t for t in preimages(profile, math.inf) if t0 + pad < t < t1 - pad]
    ends = sum(abs(math.cos(s.theta)) <= ENDPOINT_VERTICAL_TOL for s in (curve.start, curve.end))
    return inner, ends


def _merge(ts, gap):
    out = []
    for t in sorted(ts):
        if not out or t - out[-1] > gap:
            out.append(t)
    return out


def _witness(curve, name, ts):
    out = []
    for t in ts:
        s = curve.state_at(t)
        out.append((name, float(t), float(s.x), float(s.y)))
    return tuple(out)


def _candidate_xs(profiles, extent, resolution):
    crit = set()
    lo, hi = math.inf, -math.inf
    for prof in profiles.values():
        c = prof.curve
        lo, hi = min(lo, float(np.min(c.x))), max(hi, float(np.max(c.x)))
        for v in (prof.f[0], prof.f[-1]):
            if math.isfinite(v):
                crit.add(float(v))
    crit = sorted(crit)
    mids = [0.5 * (a + b) for a, b in zip(crit, crit[1:])]
    if crit:
        mids += [crit[0] - extent, crit[-1] + extent]
    step = resolution * extent
    k = int(math.ceil((hi - lo + 2 * extent) / step))
    grid = [lo - extent + i * step for i in range(k + 1)]
    return _merge(set(crit) | set(mids) | set(grid), 1e-9 * extent)


def separating_audit(config, resolution=DEFAULT_RESOLUTION):
    """Sweep candidate axis points and look for forbidden separating sets.

    Candidates are the finite f values at arc ends, midpoints between them,
    a uniform grid with spacing ``resolution`` times the configuration size,
    and infinity.  For each candidate the preimages on every arc are found;
    circle arcs centred there (or vertical lines, for infinity) are exempt.
    Reported patterns: two points with equal f on one arc, an arc that is
    vertical twice with an interior vertical point, and inclusion-minimal
    separating sets spread over several arcs (up to ``MAX_CUT`` arcs).
    """
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution!r}")
    cx = _as_complex(config)
    extent = cx.extent()
    steps = {name: float(np.max(np.diff(c.t))) if len(c) > 1 else math.inf for name, c in cx.arcs.items()}
    required = max(steps.values()) / extent
    if required > resolution:
        raise ResolutionError(
            f"arcs are sampled at {required:.3g} of the configuration size, coarser than {resolution:.3g}",
            required,
        )
    names = sorted(cx.arcs)
    profiles = {a: axis_profile(cx.arcs[a]) for a in names}
    findings, exemptions = [], []

    for a in names:
        c = cx.arcs[a]
        if c.cls is DelaunayClass.VERTICAL_HYPERPLANE:
            continue
        inner, ends = _vertical_points(c, profiles[a])
        if inner and len(inner) + ends >= 2:
            findings.append(
                Finding(TWICE_VERTICAL, (a,), INFINITY, _witness(c, a, inner),
                        f"{len(inner)} interior and {ends} end vertical points")
            )

    candidates = []
    pair_seen = set()
    cross_seen = set()
    xs = _candidate_xs(profiles, extent, resolution) + [math.inf]
    for x in xs:
        point = AxisPoint(x)
        pre, exempt = {}, []
        for a in names:
            c = cx.arcs[a]
            if point.is_infinite:
                if c.cls is DelaunayClass.VERTICAL_HYPERPLANE:
                    exempt.append(a)
                    continue
            elif is_sphere_centered(c, x):
                exempt.append(a)
                continue
            pad = 1e-9 * max(c.length, 1e-300)
            ts = [t for t in preimages(profiles[a], x) if c.t[0] + pad < t < c.t[-1] - pad]
            ts = _merge(ts, steps[a])
            if ts:
                pre[a] = ts
        for a in exempt:
            if (a, point) not in exemptions:
                exemptions.append((a, point))
        base = cx.pieces_after_cut({})
        separating = cx.pieces_after_cut({a: len(ts) for a, ts in pre.items()}) > base
        candidates.append(Candidate(point, pre, tuple(exempt), separating))
        if not separating:
            continue
        for a, ts in pre.items():
            if len(ts) >= 2 and a not in pair_seen:
                pair_seen.add(a)
                findings.append(
                    Finding(DOWNWARD_PAIR, (a,), point, _witness(cx.arcs[a], a, ts[:2]),
                            "two points of one arc share the axis point")
                )
        for combo in _minimal_cuts(cx, sorted(pre), base):
            if len(combo) >= 2 and combo not in cross_seen:
                cross_seen.add(combo)
                wit = sum((_witness(cx.arcs[a], a, pre[a][:1]) for a in combo), ())
                findings.append(Finding(CROSS_ARC, combo, point, wit, "points on distinct arcs separate"))
    return AuditReport(resolution, candidates, findings, exemptions)


def _minimal_cuts(cx, arcs, base):
    """Inclusion-minimal sets of arcs whose single cuts separate the complex."""
    found = []
    for k in range(1, min(len(arcs), MAX_CUT) + 1):
        for combo in itertools.combinations(arcs, k):
            if any(set(f) <= set(combo) for f in found):
                continue
            if cx.pieces_after_cut({a: 1 for a in combo}) > base:
                found.append(combo)
    return found
