"""Triple junctions: 120 degree meeting, pressure cocycle and force balance.

Every check works in the outgoing frame of a vertex p: each incident arc is
oriented away from p and carries the normal obtained by turning its outgoing
tangent clockwise.  A traced arc that *ends* at p is flipped into that frame
(tangent + pi, H and F negated); `junction_frame` is the only place where this
re-signing happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .delaunay import DelaunayParams, GeneratingCurve
from .errors import DomainError, MalformedVertex

POSITION_TOL = 1e-9
ANGLE_TOL = 1e-9
TWO_THIRDS_PI = 2.0 * math.pi / 3.0

START, FINISH = "start", "finish"


def wrap_angle(a):
    """Reduce to (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    return math.pi if r == -math.pi else r


@dataclass(frozen=True)
class Incidence:
    """One arc at a vertex, already in the outgoing frame.

    ``theta`` is the outgoing tangent angle, ``H`` the mean curvature for the
    clockwise-turned normal.  ``point`` is where the arc actually ends, if
    known, and is checked against the vertex position.
    """

    arc: str
    end: str
    theta: float
    H: float
    point: tuple | None = None


@dataclass(frozen=True)
class VertexGeometry:
    position: tuple
    incident: tuple

    def __post_init__(self):
        if len(self.incident) != 3:
            raise MalformedVertex(f"a vertex needs three incident arcs, got {len(self.incident)}")
        if not self.position[1] > 0:
            raise MalformedVertex(f"vertex must lie above the axis, got {self.position}")


def junction_frame(curve: GeneratingCurve, end: str, name: str = "") -> Incidence:
    """Incidence record for ``curve`` at its start or finish."""
    if end == START:
        s = curve.start
        return Incidence(name, end, s.theta, curve.params.H, (s.x, s.y))
    if end == FINISH:
        s = curve.end
        return Incidence(name, end, s.theta + math.pi, -curve.params.H, (s.x, s.y))
    raise DomainError(f"end must be {START!r} or {FINISH!r}, got {end!r}")


def frame_force(curve: GeneratingCurve, end: str) -> float:
    """The arc's force re-signed into the outgoing frame at ``end``."""
    return curve.force if end == START else -curve.force


def _dims(params, k=3):
    if isinstance(params, int):
        return [params] * k
    ns = [p.n if isinstance(p, DelaunayParams) else int(p) for p in params]
    if len(ns) != k:
        raise DomainError(f"expected {k} parameter sets, got {len(ns)}")
    if len(set(ns)) != 1:
        raise DomainError(f"arcs at one vertex must share the dimension, got {ns}")
    return ns


def angle_residual(thetas: Sequence[float]) -> float:
    """Largest deviation of the cyclic gaps between three directions from 2pi/3."""
    a = sorted(t % (2.0 * math.pi) for t in thetas)
    gaps = (a[1] - a[0], a[2] - a[1], 2.0 * math.pi - (a[2] - a[0]))
    return max(abs(g - TWO_THIRDS_PI) for g in gaps)


def junction_residual(v: VertexGeometry, params, pos_tol: float = POSITION_TOL):
    """(angle_residual, curvature_residual, force_residual) at ``v``.

    ``params`` is the common dimension n or one DelaunayParams per arc (only
    n is used; curvatures come from the incidence records).
    """
    n = _dims(params)[0]
    x0, y0 = v.position
    for inc in v.incident:
        if inc.point is not None:
            d = math.hypot(inc.point[0] - x0, inc.point[1] - y0)
            if d > pos_tol * max(1.0, y0):
                raise MalformedVertex(f"arc {inc.arc!r} ends {d:.3g} away from the vertex")
    ang = angle_residual([i.theta for i in v.incident])
    curv = abs(math.fsum(i.H for i in v.incident))
    yn = y0 ** (n - 2)
    frc = abs(math.fsum(yn * (math.cos(i.theta) - i.H * y0) for i in v.incident))
    return ang, curv, frc


@dataclass(frozen=True)
class RegionPressures:
    """Pressures of the two regions; the interface carries H0 = H1 - H2."""

    H1: float
    H2: float

    def __post_init__(self):
        if not (self.H1 > 0 and self.H2 > 0):
            raise DomainError(f"region pressures must be positive, got ({self.H1}, {self.H2})")

    @property
    def H0(self):
        return self.H1 - self.H2

    def pressure(self, region) -> float:
        """Pressure of region 1, 2 or 0 (the exterior)."""
        return {0: 0.0, 1: self.H1, 2: self.H2}[int(region)]

    def arc_curvature(self, cw_region, ccw_region) -> float:
        """H of an arc whose clockwise normal points into ``cw_region``."""
        return self.pressure(cw_region) - self.pressure(ccw_region)


@dataclass(frozen=True)
class BoundaryCheck:
    ok: bool
    witness: tuple | None = None
    dH: float = 0.0
    dF: float = 0.0

    def __bool__(self):
        return self.ok


def _invariants(arc):
    if isinstance(arc, GeneratingCurve):
        return arc.params.H, arc.force
    if isinstance(arc, tuple) and len(arc) == 2:
        return float(arc[0]), float(arc[1])
    return arc.H, arc.F


def outer_boundary_check(component, tol: float = 1e-9) -> BoundaryCheck:
    """Do all outer arcs share (H, F)?

    ``component`` is a mapping or a sequence of (name, arc) pairs where an arc
    is a GeneratingCurve, an (H, F) tuple or anything with ``H`` and ``F``.
    Arcs must be oriented with the component on their clockwise side.
    """
    items = list(component.items()) if hasattr(component, "items") else list(component)
    if len(items) < 2:
        return BoundaryCheck(True)
    name0, a0 = items[0]
    H0, F0 = _invariants(a0)
    worst_h = worst_f = 0.0
    for name, arc in items[1:]:
        H, F = _invariants(arc)
        dh, df = abs(H - H0), abs(F - F0)
        worst_h, worst_f = max(worst_h, dh), max(worst_f, df)
        if dh > tol or df > tol:
            return BoundaryCheck(False, (name0, name), dh, df)
    return BoundaryCheck(True, None, worst_h, worst_f)
