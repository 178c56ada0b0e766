"""Double-bubble generating diagrams: trees of components, realization, audit.

A diagram lives in the upper half plane and is drawn symmetric about x = 0.
The root component touches the axis through two circular caps; every other
component is an annular band stacked on its parent.  Realization shoots
from the left half and asks each arc that crosses the mirror line to do so
horizontally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .delaunay import CurveState, DelaunayClass, DelaunayParams, GeneratingCurve, StopSpec, trace
from .errors import AdmissionError, DomainError, NoConvergence, TreeError
from .junctions import FINISH, START, RegionPressures, VertexGeometry, junction_frame, junction_residual, wrap_angle
from .standard import solve_standard

EXTERIOR = "exterior"
CLOSURE_TOL = 1e-8
ADMISSION_TOL = 1e-6
AXIS_TOL = 1e-8
THIRD = math.pi / 3


# ------------------------------------------------------------------ trees


@dataclass(frozen=True)
class Component:
    id: str
    region: int
    parent: str | None = None
    children: tuple = ()


class ConfigTree:
    """The tree of components: one root, bands attached parent to child."""

    def __init__(self, components):
        comps = [c if isinstance(c, Component) else _component(c) for c in components]
        if not comps:
            raise TreeError("a tree needs at least one component")
        self.components = {}
        for c in comps:
            if c.id in self.components:
                raise TreeError(f"duplicate component id {c.id!r}")
            if c.region not in (1, 2):
                raise TreeError(f"component {c.id!r} has region {c.region!r}; labels are 1 or 2")
            self.components[c.id] = c
        roots = [c for c in comps if c.parent is None]
        if len(roots) != 1:
            raise TreeError(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0]
        for c in comps:
            for ch in c.children:
                if ch not in self.components:
                    raise TreeError(f"{c.id!r} lists unknown child {ch!r}")
                if self.components[ch].parent != c.id:
                    raise TreeError(f"{ch!r} does not name {c.id!r} as its parent")
                if self.components[ch].region == c.region:
                    raise TreeError(f"{c.id!r} and its child {ch!r} share region {c.region}")
            if c.parent is not None:
                if c.parent not in self.components:
                    raise TreeError(f"{c.id!r} names unknown parent {c.parent!r}")
                if c.id not in self.components[c.parent].children:
                    raise TreeError(f"{c.parent!r} does not list {c.id!r} as a child")
        if len(self.root.children) > 1:
            raise TreeError(f"the root has {len(self.root.children)} branches; it may have only one")
        seen, stack = set(), [self.root.id]
        while stack:
            cid = stack.pop()
            if cid in seen:
                raise TreeError(f"cycle through {cid!r}")
            seen.add(cid)
            stack.extend(self.components[cid].children)
        if seen != set(self.components):
            raise TreeError(f"components not reachable from the root: {sorted(set(self.components) - seen)}")

    def __len__(self):
        return len(self.components)

    def __getitem__(self, cid):
        return self.components[cid]

    @property
    def trivial(self):
        return len(self.components) == 1

    def chain(self):
        """Component ids root first, or None if some component branches."""
        out, cur = [], self.root
        while True:
            out.append(cur.id)
            if not cur.children:
                return out
            if len(cur.children) > 1:
                return None
            cur = self.components[cur.children[0]]

    def leaves(self):
        return [c.id for c in self.components.values() if not c.children and c.parent is not None]

    def depth(self, cid):
        d = 0
        while self.components[cid].parent is not None:
            cid = self.components[cid].parent
            d += 1
        return d

    def stack(self, base):
        """``base`` and all its descendants."""
        out, todo = [], [base]
        while todo:
            cid = todo.pop(0)
            out.append(cid)
            todo.extend(self.components[cid].children)
        return out

    def to_list(self):
        return [
            {"id": c.id, "region": c.region, "parent": c.parent, "children": list(c.children)}
            for c in self.components.values()
        ]

    @classmethod
    def from_list(cls, items):
        return cls([_component(d) for d in items])


def _component(d):
    try:
        return Component(str(d["id"]), int(d["region"]), d.get("parent"), tuple(d.get("children", ())))
    except (KeyError, TypeError, ValueError) as e:
        raise TreeError(f"bad component record {d!r}: {e}") from None


# ---------------------------------------------------------- configurations


@dataclass
class ArcRecord:
    """A realized arc and what lies on either side of it.

    ``cw``/``ccw`` name the component (or the exterior) on the side of the
    clockwise-turned normal and on the other side; ``ends`` gives the vertex
    at the start and finish, None where the arc ends on the axis.
    """

    name: str
    curve: GeneratingCurve
    cw: str
    ccw: str
    kind: str
    ends: tuple


@dataclass
class VertexRecord:
    name: str
    geometry: VertexGeometry
    side: str | None = None
    roles: dict = field(default_factory=dict)

    def tangents(self):
        by_arc = {inc.arc: inc.theta for inc in self.geometry.incident}
        return {role: by_arc[arc] for role, arc in self.roles.items()}


@dataclass
class Configuration:
    n: int
    tree: ConfigTree
    pressures: RegionPressures
    arcs: dict
    vertices: dict
    axis_endpoints: list
    attachments: dict
    residuals: dict = field(default_factory=dict)
    shooting: dict = field(default_factory=dict)
    template: str = "chain"
    converged: bool = True
    spec: object = None  # the RealizeSpec this came from; None for derived copies

    def pressure(self, side):
        if side == EXTERIOR:
            return 0.0
        if side.startswith("region:"):
            return self.pressures.pressure(int(side[7:]))
        return self.pressures.pressure(self.tree[side].region)

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)

    def worst_residual(self):
        if not self.residuals:
            return None, 0.0
        k = max(self.residuals, key=self.residuals.get)
        return k, self.residuals[k]

    def arc_complex(self):
        from .axis_map import ArcComplex

        return ArcComplex({a: r.curve for a, r in self.arcs.items()}, {a: r.ends for a, r in self.arcs.items()})

    def reflected(self):
        """Mirror image under x -> -x; sides and clockwise labels swap."""
        arcs = {
            a: ArcRecord(a, r.curve.reflected(), r.ccw, r.cw, r.kind, r.ends) for a, r in self.arcs.items()
        }
        verts = {}
        for v, rec in self.vertices.items():
            g = rec.geometry
            inc = tuple(
                type(i)(i.arc, i.end, math.pi - i.theta, -i.H, None if i.point is None else (-i.point[0], i.point[1]))
                for i in g.incident
            )
            side = {"left": "right", "right": "left"}.get(rec.side, rec.side)
            verts[v] = VertexRecord(v, VertexGeometry((-g.position[0], g.position[1]), inc), side, dict(rec.roles))
        att = {c: (q, p) for c, (p, q) in self.attachments.items()}
        return Configuration(
            self.n, self.tree, self.pressures, arcs, verts, list(self.axis_endpoints), att,
            dict(self.residuals), dict(self.shooting), self.template, self.converged,
        )

    def summary(self):
        k, worst = self.worst_residual()
        return {
            "n": self.n,
            "template": self.template,
            "converged": self.converged,
            "pressures": {"H1": self.pressures.H1, "H2": self.pressures.H2},
            "tree": self.tree.to_list(),
            "shooting": dict(self.shooting),
            "max_residual": worst,
            "worst": k,
            "residuals": dict(sorted(self.residuals.items())),
            "arcs": {
                a: {
                    "kind": r.kind, "cw": r.cw, "ccw": r.ccw, "ends": list(r.ends),
                    "H": r.curve.params.H, "F": r.curve.force, "class": str(r.curve.cls),
                    "length": r.curve.length,
                }
                for a, r in sorted(self.arcs.items())
            },
            "vertices": {
                v: {"position": list(rec.geometry.position), "side": rec.side, "roles": dict(rec.roles)}
                for v, rec in sorted(self.vertices.items())
            },
        }


# ----------------------------------------------------------- residuals


def axis_meeting_residual(curve: GeneratingCurve, end=FINISH):
    """|cos theta| where ``curve`` touches the axis; zero for a smooth crossing."""
    s = curve.end if end == FINISH else curve.start
    return abs(math.cos(s.theta))


def _cocycle(config, rec):
    want = config.pressure(rec.cw) - config.pressure(rec.ccw)
    return abs(rec.curve.params.H - want)


def residual_report(config: Configuration, extra=None):
    """All closure residuals of a configuration, keyed by check and object."""
    out = dict(extra or {})
    for a, rec in config.arcs.items():
        out[f"cocycle:{a}"] = _cocycle(config, rec)
        if rec.kind == "cap" and config.template == "chain":
            scale = max(float(np.max(rec.curve.y)), 1e-300) ** (config.n - 2)
            out[f"sphere:{a}"] = abs(rec.curve.force) / scale
    for a, end in config.axis_endpoints:
        out[f"axis:{a}"] = axis_meeting_residual(config.arcs[a].curve, end)
    for v, rec in config.vertices.items():
        # the gap is reported below, so open vertices of partial solutions stay measurable
        ang, curv, frc = junction_residual(rec.geometry, config.n, pos_tol=math.inf)
        x0, y0 = rec.geometry.position
        gap = max(
            (math.hypot(i.point[0] - x0, i.point[1] - y0) for i in rec.geometry.incident if i.point is not None),
            default=0.0,
        )
        out[f"junction:{v}"] = max(ang, curv, frc, gap)
    return out


def _incidence(rec: ArcRecord, end):
    return junction_frame(rec.curve, end, rec.name)


# ------------------------------------------------------------ realization


@dataclass
class RealizeSpec:
    """Everything `realize` needs: tree, dimension, pressures and start data.

    ``volumes`` may replace ``pressures`` for the standard template.
    ``shooting`` holds optional initial guesses: ``center`` and ``phi`` place
    the left root cap (centre on the axis, polar angle of the root vertex) and
    ``lengths`` the outer arcs of the intermediate bands.
    """

    tree: ConfigTree
    n: int = 3
    pressures: RegionPressures | None = None
    volumes: tuple | None = None
    shooting: dict = field(default_factory=dict)
    boundaries: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d):
        if "tree" not in d:
            raise TreeError("config spec needs a 'tree'")
        tree = ConfigTree.from_list(d["tree"])
        pr = d.get("pressures")
        pressures = RegionPressures(float(pr["H1"]), float(pr["H2"])) if pr else None
        vol = d.get("volumes")
        volumes = (float(vol["v1"]), float(vol["v2"])) if vol else None
        return cls(tree, int(d.get("n", 3)), pressures, volumes, dict(d.get("shooting", {})), list(d.get("boundaries", [])))

    def to_dict(self):
        out = {"n": self.n, "tree": self.tree.to_list(), "shooting": dict(self.shooting), "boundaries": list(self.boundaries)}
        if self.pressures is not None:
            out["pressures"] = {"H1": self.pressures.H1, "H2": self.pressures.H2}
        if self.volumes is not None:
            out["volumes"] = {"v1": self.volumes[0], "v2": self.volumes[1]}
        return out


def load_spec(path):
    with open(path) as fh:
        return RealizeSpec.from_dict(json.load(fh))


def realize(spec: RealizeSpec, tol=CLOSURE_TOL, max_iter=50, strict=True):
    """Trace every arc of ``spec`` and close the vertices by shooting.

    A root-only tree is the standard bubble.  Otherwise the tree must be a
    chain (each component has at most one child); bands are stacked on the
    root symmetrically about x = 0.  On failure NoConvergence carries the
    best partial configuration; with ``strict=False`` it is returned instead.
    """
    if spec.tree.trivial:
        config = _realize_standard(spec)
    elif spec.tree.chain() is None:
        raise TreeError("only chains of bands can be realized by shooting; a component here has two children")
    elif spec.pressures is None:
        raise DomainError("a banded configuration needs region pressures")
    else:
        config = _realize_chain(spec, tol, max_iter, strict)
    config.spec = spec
    return config


def solved_spec(config: Configuration):
    """The realizing spec with its shooting data replaced by the solution."""
    if config.spec is None:
        raise DomainError("configuration has no realizing spec (derived copy?)")
    d = config.spec.to_dict()
    d["shooting"] = {k: v for k, v in config.shooting.items() if k in ("center", "phi", "lengths")}
    return RealizeSpec.from_dict(d)


def _pressures_to_junction(P1, P2):
    """(rho, beta) of the standard bubble with region pressures P1 (left), P2."""
    from scipy.optimize import brentq

    g = lambda b: -P1 * math.sin(b) - P2 * math.sin(b + 2 * math.pi / 3)
    beta = brentq(g, -2 * math.pi / 3 + 1e-15, -1e-15, xtol=1e-16, rtol=1e-15)
    return -math.sin(beta) / P2, beta


def _realize_standard(spec):
    n = spec.n
    root = spec.tree.root
    bubble = None
    if spec.volumes is not None:
        bubble = solve_standard(n, *spec.volumes)
        pressures = bubble.pressures
    elif spec.pressures is not None:
        pressures = spec.pressures
    else:
        raise DomainError("the standard template needs pressures or volumes")
    rho, beta = _pressures_to_junction(pressures.H1, pressures.H2)
    # cw-normal angles at the junction; tangents are the normals turned back by pi/2
    names = {"cap:left": beta + 2 * math.pi / 3, "interface": beta - 2 * math.pi / 3, "cap:right": beta}
    sides = {"cap:left": (EXTERIOR, "region:1"), "interface": ("region:1", "region:2"), "cap:right": ("region:2", EXTERIOR)}
    arcs, extra = {}, {}
    step = 0.01 * rho
    for name, psi in names.items():
        H = -math.sin(psi) / rho
        s0 = CurveState(0.0, rho, psi + math.pi / 2)
        length = 4 * math.pi / max(abs(H), 1e-300) if abs(H) > 1e-12 else 2 * rho
        c = trace(s0, DelaunayParams(n, H), StopSpec(length=length, axis=True, max_step=step), conserve_force=True)
        cw, ccw = sides[name]
        kind = "interface" if name == "interface" else "cap"
        arcs[name] = ArcRecord(name, c, cw, ccw, kind, ("v", None))
        if c.event != "axis":
            extra[f"reach:{name}"] = c.end.y
    inc = tuple(_incidence(arcs[a], START) for a in names)
    vertex = VertexRecord("v", VertexGeometry((0.0, rho), inc))
    config = Configuration(
        n, spec.tree, pressures, arcs, {"v": vertex}, [(a, FINISH) for a in names], {},
        shooting={"rho": rho, "beta": beta}, template="standard",
    )
    if bubble is not None:
        extra["standard:rho"] = abs(bubble.rho - rho) / rho
        extra["standard:beta"] = abs(bubble.beta - beta)
    for name, rec in arcs.items():
        c = rec.curve
        if c.cls is DelaunayClass.SPHERE:
            # an axis-centred circle lands where its centre sits one radius away
            H = c.params.H
            centre = c.start.x + math.sin(c.start.theta) / H
            extra[f"closure:{name}"] = abs(abs(c.end.x - centre) - 1 / abs(H))
        else:
            extra[f"closure:{name}"] = abs(c.end.x - c.start.x)
    config.residuals = residual_report(config, extra)
    return config


class _Chain:
    """Shooting model of a symmetric chain of bands on a root."""

    def __init__(self, spec):
        self.spec = spec
        self.n = spec.n
        self.ids = spec.tree.chain()
        self.P = [spec.pressures.pressure(spec.tree[c].region) for c in self.ids]
        self.k = len(self.ids) - 1
        self.r0 = 1.0 / self.P[0]
        self.lmax = 20.0 * self.r0

    def stop(self, length=None, fine=False, to_mirror=True):
        step = (0.01 if fine else 0.05) * self.r0
        if to_mirror:
            return StopSpec(length=self.lmax, x_max=0.0, axis=True, max_step=step)
        return StopSpec(length=length, max_step=step)

    def root_vertex(self, u):
        c, phi = u[0], u[1]
        r = self.r0
        return c - r * math.cos(phi), r * math.sin(phi), math.pi / 2 - phi

    def shoot(self, u, fine=False):
        """Mirror-line angles of the crossing arcs, plus the traced pieces."""
        px, py, th = self.root_vertex(u)
        res, pieces = [], []
        for i in range(self.k):
            if not (py > 1e-3 * self.r0 and px < 0.0):
                return None, pieces
            iface = trace(CurveState(px, py, th - THIRD), DelaunayParams(self.n, self.P[i] - self.P[i + 1]), self.stop(fine=fine))
            if iface.event != "x_max":
                return None, pieces
            res.append(wrap_angle(iface.end.theta))
            outer_p = DelaunayParams(self.n, self.P[i + 1])
            start = CurveState(px, py, th + THIRD)
            if i < self.k - 1:
                L = u[2 + i]
                if not L > 0:
                    return None, pieces
                outer = trace(start, outer_p, self.stop(L, fine, to_mirror=False))
            else:
                outer = trace(start, outer_p, self.stop(fine=fine))
                if outer.event != "x_max":
                    return None, pieces
                res.append(wrap_angle(outer.end.theta))
            pieces.append(((px, py, th), iface, outer))
            e = outer.end
            px, py, th = e.x, e.y, e.theta
        return np.array(res), pieces

    def residual(self, u):
        try:
            r, _ = self.shoot(u)
        except Exception:  # a trace that leaves the domain counts as a failed shot
            return None
        return r

    def guess(self):
        sh = self.spec.shooting
        if "center" in sh and "phi" in sh:
            u = [float(sh["center"]), float(sh["phi"])] + [float(v) for v in sh.get("lengths", [])]
            if len(u) != self.k + 1:
                raise DomainError(f"shooting guess needs {self.k - 1} lengths, got {len(u) - 2}")
            return np.array(u)
        return self._scan()

    def _scan(self):
        r = self.r0
        best = None
        lens = np.geomspace(0.05, 4.0, 6) * r
        for c in np.linspace(-3.0, 0.5, 12) * r:
            for phi in np.linspace(0.15, 2.9, 12):
                for ls in np.array(np.meshgrid(*[lens] * (self.k - 1))).reshape(self.k - 1, -1).T if self.k > 1 else [()]:
                    u = np.array([c, phi, *ls])
                    res = self.residual(u)
                    if res is not None:
                        nrm = float(np.linalg.norm(res))
                        if best is None or nrm < best[0]:
                            best = (nrm, u)
        if best is None:
            raise NoConvergence("no initial shot reaches the mirror line")
        return best[1]


def shooting_residual(spec: RealizeSpec, u):
    """Closure residuals of a chain at shooting parameters (center, phi, lengths...).

    None when a shot fails to reach the mirror line.
    """
    return _Chain(spec).residual(np.asarray(u, dtype=float))


def _newton(f, u, tol, max_iter, h=1e-7):
    """Damped Newton with central-difference Jacobian; returns (u, r, history)."""
    hist = []
    r = f(u)
    if r is None:
        return u, None, hist
    for _ in range(max_iter):
        nrm = float(np.max(np.abs(r)))
        hist.append(nrm)
        if nrm < tol:
            break
        J = np.empty((len(r), len(u)))
        for j in range(len(u)):
            d = h * max(1.0, abs(u[j]))
            a, b = u.copy(), u.copy()
            a[j] += d
            b[j] -= d
            ra, rb = f(a), f(b)
            if ra is None or rb is None:
                return u, r, hist
            J[:, j] = (ra - rb) / (2 * d)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-4:
            rn = f(u + lam * step)
            if rn is not None and np.linalg.norm(rn) < np.linalg.norm(r):
                break
            lam /= 2
        else:
            return u, r, hist
        u, r = u + lam * step, rn
    return u, r, hist


def _realize_chain(spec, tol, max_iter, strict):
    model = _Chain(spec)
    u0 = model.guess()
    u, r, hist = _newton(model.residual, u0, tol * 1e-3, max_iter)
    if r is None:
        raise NoConvergence("the initial shot does not reach the mirror line", hist)
    config = _build_chain(model, u, r)
    config.shooting["iterations"] = len(hist)
    ok = float(np.max(np.abs(r))) < tol * 1e-3 and config.max_residual < tol
    config.converged = bool(ok)
    config.spec = spec
    if not ok and strict:
        raise NoConvergence(f"shooting stalled at residual {config.max_residual:.3g}", hist, config)
    return config


def _mirror(curve):
    """Mirror image traversed the other way, so the same component stays clockwise."""
    return curve.reflected().reversed()


def _build_chain(model, u, r):
    n, ids, k, P = model.n, model.ids, model.k, model.P
    _, pieces = model.shoot(u, fine=True)
    arcs, verts, att, extra = {}, {}, {}, {}
    for j, val in enumerate(r):
        extra[f"shoot:{j}"] = abs(float(val))

    # root caps: traced from the vertex down to the axis, then turned around
    (px, py, th), _, _ = pieces[0]
    down = trace(
        CurveState(px, py, th + math.pi), DelaunayParams(n, -P[0]),
        StopSpec(length=4 * math.pi * model.r0, axis=True, max_step=0.01 * model.r0), conserve_force=True,
    )
    cap = down.reversed()
    arcs["cap:L"] = ArcRecord("cap:L", cap, ids[0], EXTERIOR, "cap", (None, "p0"))
    arcs["cap:R"] = ArcRecord("cap:R", _mirror(cap), ids[0], EXTERIOR, "cap", ("q0", None))
    axis_ends = [("cap:L", START), ("cap:R", FINISH)]
    extra["reach:cap:L"] = 0.0 if down.event == "axis" else down.end.y

    for i, ((vx, vy, vth), iface, outer) in enumerate(pieces):
        lower, upper = ids[i], ids[i + 1]
        full = 2.0 * (iface.t[-1] - iface.t[0])
        I = trace(iface.start, iface.params, model.stop(full, True, to_mirror=False))
        name = f"iface:{i}"
        arcs[name] = ArcRecord(name, I, lower, upper, "interface", (f"p{i}", f"q{i}"))
        extra[f"closure:{name}"] = _closure(I, vx, vy, vth - THIRD)
        if i < k - 1:
            arcs[f"outer:{i + 1}L"] = ArcRecord(f"outer:{i + 1}L", outer, upper, EXTERIOR, "outer", (f"p{i}", f"p{i + 1}"))
            arcs[f"outer:{i + 1}R"] = ArcRecord(
                f"outer:{i + 1}R", _mirror(outer), upper, EXTERIOR, "outer", (f"q{i + 1}", f"q{i}")
            )
        else:
            full = 2.0 * (outer.t[-1] - outer.t[0])
            O = trace(outer.start, outer.params, model.stop(full, True, to_mirror=False))
            arcs[f"outer:{i + 1}"] = ArcRecord(f"outer:{i + 1}", O, upper, EXTERIOR, "outer", (f"p{i}", f"q{i}"))
            extra[f"closure:outer:{i + 1}"] = _closure(O, vx, vy, vth + THIRD)
        att[upper] = (f"p{i}", f"q{i}")

    for i in range(k):
        below_l = "cap:L" if i == 0 else f"outer:{i}L"
        below_r = "cap:R" if i == 0 else f"outer:{i}R"
        above_l = f"outer:{i + 1}L" if i < k - 1 else f"outer:{i + 1}"
        above_r = f"outer:{i + 1}R" if i < k - 1 else f"outer:{i + 1}"
        iface = f"iface:{i}"
        pos = (arcs[below_l].curve.end.x, arcs[below_l].curve.end.y)
        inc = (_incidence(arcs[below_l], FINISH), _incidence(arcs[iface], START), _incidence(arcs[above_l], START))
        verts[f"p{i}"] = VertexRecord(
            f"p{i}", VertexGeometry(pos, inc), "left", {"outer": below_l, "lower": iface, "upper": above_l}
        )
        pos = (arcs[below_r].curve.start.x, arcs[below_r].curve.start.y)
        inc = (_incidence(arcs[below_r], START), _incidence(arcs[iface], FINISH), _incidence(arcs[above_r], FINISH))
        verts[f"q{i}"] = VertexRecord(
            f"q{i}", VertexGeometry(pos, inc), "right", {"outer": below_r, "lower": iface, "upper": above_r}
        )
    shooting = {"center": float(u[0]), "phi": float(u[1]), "lengths": [float(v) for v in u[2:]]}
    config = Configuration(n, model.spec.tree, model.spec.pressures, arcs, verts, axis_ends, att, shooting=shooting)
    config.residuals = residual_report(config, extra)
    return config


def _closure(curve, vx, vy, vth):
    """How far a symmetric arc misses the mirror image of its start."""
    e = curve.end
    return max(math.hypot(e.x + vx, e.y - vy), abs(wrap_angle(e.theta + vth)))


# ------------------------------------------------------------------ audit

NEAR_GRAPH = {(0, 0), (0, 1), (-1, 0)}

STACK_INEQUALITY = "stack-inequality"
STACK_DOWNWARD = "stack-downward-turn"
UPSIDE_DOWN_PRESSURE = "upside-down-leaf-pressure"
ROOT_CAP_SPHERE = "root-cap-sphere"
ROOT_CHILD_NOTCH = "root-child-notch"
ROOT_CHILD_NEAR_GRAPH = "root-child-near-graph"
CLASSIFICATION = "component-classification"


@dataclass
class ConfigAudit:
    resolution: float
    separating: object
    notches: dict
    components: dict
    findings: list

    @property
    def violations(self):
        return self.findings

    @property
    def ok(self):
        return not self.findings

    def rules(self):
        return sorted({f.rule for f in self.findings})

    def signature(self):
        """(rule, arcs) pairs; stable under reflection."""
        return sorted({(f.rule, tuple(sorted(f.arcs))) for f in self.findings})

    def to_dict(self):
        return {
            "resolution": self.resolution,
            "ok": self.ok,
            "rules": self.rules(),
            "notches": dict(sorted(self.notches.items())),
            "components": {k: self.components[k] for k in sorted(self.components)},
            "separating": self.separating.to_dict(),
            "findings": [f.to_dict() for f in self.findings],
        }


def _away(rec: ArcRecord, vertex):
    """The arc's curve oriented away from ``vertex``."""
    start, _ = rec.ends
    return rec.curve if start == vertex else rec.curve.reversed()


def limit_axis_value(curve: GeneratingCurve, vertical_tol=1e-9):
    """f approaching the start of ``curve``, as a value in [-inf, inf]."""
    from .axis_map import axis_value

    s = curve.start
    if abs(math.cos(s.theta)) > vertical_tol:
        return axis_value(s.x, s.y, s.theta)
    if curve.cls is DelaunayClass.VERTICAL_HYPERPLANE:
        return math.inf
    h = min(1e-6 * max(curve.length, 1e-300), 0.5 * (curve.t[-1] - curve.t[0]))
    q = curve.state_at(curve.t[0] + h)
    return math.copysign(math.inf, axis_value(q.x, q.y, q.theta))


def vertex_notches(config: Configuration, angle_tol=1e-7):
    """Notch of every vertex with role labels."""
    from .axis_map import vertex_notch

    out = {}
    for v, rec in sorted(config.vertices.items()):
        if not rec.roles:
            continue
        tang = rec.tangents()
        f_limit = None
        for role, th in tang.items():
            if abs(math.cos(th)) <= angle_tol:
                f_limit = limit_axis_value(_away(config.arcs[rec.roles[role]], v))
        out[v] = vertex_notch(tang, rec.side, angle_tol=angle_tol, f_limit=f_limit)
    return out


def _right_side_up(config, cid):
    """True when the parent lies below the boundary shared with it."""
    p, q = config.attachments[cid]
    lower = config.vertices[p].roles["lower"]
    rec = config.arcs[lower]
    curve = rec.curve
    # sample the shared boundary at its highest point; the parent is below
    # when it sits on the clockwise side of a rightward-moving arc
    i = int(np.argmax(curve.y))
    below = rec.cw if math.cos(curve.theta[i]) > 0 else rec.ccw
    return below == config.tree[cid].parent


def _interior_downward_verticals(curve, pad_frac=1e-6):
    from .axis_map import axis_profile, preimages

    pad = pad_frac * max(curve.length, 1e-300)
    ts = [t for t in preimages(axis_profile(curve), math.inf) if curve.t[0] + pad < t < curve.t[-1] - pad]
    return [t for t in ts if math.sin(curve.state_at(t).theta) < 0]


def audit(config: Configuration, resolution=None, admission_tol=ADMISSION_TOL):
    """Run every instability rule on a realized configuration."""
    from .axis_map import DEFAULT_RESOLUTION, INFINITY, AxisPoint, Finding, separating_audit

    resolution = DEFAULT_RESOLUTION if resolution is None else resolution
    k, worst = config.worst_residual()
    if not worst <= admission_tol:
        raise AdmissionError(f"closure residual {k} = {worst:.3g} exceeds the admission threshold {admission_tol:g}")
    sep = separating_audit(config.arc_complex(), resolution)
    findings = list(sep.findings)
    notches = vertex_notches(config)
    comps = {}
    tree = config.tree
    root = tree.root.id

    for cid, (p, q) in sorted(config.attachments.items()):
        mp, mq = notches[p], notches[q]
        rsu = _right_side_up(config, cid)
        info = {"notches": [mp, mq], "right_side_up": rsu, "leaf": not tree[cid].children}
        info["near_graph"] = (mp, mq) in NEAR_GRAPH
        comps[cid] = info

    # stacks: a base (not the root) with its descendants
    for cid in sorted(comps):
        members = tree.stack(cid)
        boundaries = [comps[m]["notches"] for m in members]
        near = all(tuple(b) in NEAR_GRAPH for b in boundaries)
        comps[cid]["stack"] = members
        comps[cid]["near_graph_stack"] = near and comps[cid]["right_side_up"]

    for cid, info in sorted(comps.items()):
        p, q = config.attachments[cid]
        if info["leaf"] and not info["near_graph"]:
            findings.append(Finding(CLASSIFICATION, (cid,), INFINITY, ((p, info["notches"][0]), (q, info["notches"][1])),
                                    "leaf is not near graph"))
        if info["leaf"] and info["near_graph"] and not info["right_side_up"]:
            mine = config.pressure(cid)
            other = config.pressures.pressure(3 - tree[cid].region)
            if not mine > other:
                findings.append(Finding(UPSIDE_DOWN_PRESSURE, (cid,), INFINITY, ((cid, mine), ("other", other)),
                                        "upside-down near-graph leaf without the higher pressure"))
        if info["near_graph_stack"]:
            g1 = config.vertices[p].roles["outer"]
            g6 = config.vertices[q].roles["outer"]
            f1 = limit_axis_value(_away(config.arcs[g1], p))
            f6 = limit_axis_value(_away(config.arcs[g6], q))
            info["f1_p"], info["f6_q"] = f1, f6
            if not f1 < f6:
                findings.append(Finding(STACK_INEQUALITY, (g1, g6), AxisPoint(f1), ((p, f1), (q, f6)),
                                        "f1(p) < f6(q) fails"))
            for g, v in ((g1, p), (g6, q)):
                ts = _interior_downward_verticals(_away(config.arcs[g], v))
                if ts:
                    findings.append(Finding(STACK_DOWNWARD, (g,), INFINITY, tuple((v, t) for t in ts),
                                            "outer arc turns downward past the vertical"))

    for a, rec in sorted(config.arcs.items()):
        if rec.kind == "cap" and rec.cw in (root, "region:1", "region:2") and rec.curve.cls is not DelaunayClass.SPHERE:
            findings.append(Finding(ROOT_CAP_SPHERE, (a,), INFINITY, ((a, rec.curve.force),), "root cap is not spherical"))
    for child in tree.root.children:
        p, q = config.attachments[child]
        for v in (p, q):
            if notches[v] not in (-1, 0, 1):
                findings.append(Finding(ROOT_CHILD_NOTCH, (child,), INFINITY, ((v, notches[v]),),
                                        "root vertex rotated beyond one notch"))
        info = comps[child]
        bad_leaf = info["leaf"] and info["near_graph"] and not info["right_side_up"]
        if bad_leaf or info["near_graph_stack"]:
            kind = "upside-down near-graph leaf" if bad_leaf else "base of a right-side-up near-graph stack"
            findings.append(Finding(ROOT_CHILD_NEAR_GRAPH, (child,), INFINITY, ((p, notches[p]), (q, notches[q])),
                                    f"child of the root is the {kind}"))
    return ConfigAudit(resolution, sep, notches, comps, findings)
