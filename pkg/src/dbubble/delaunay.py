"""Generating curves of constant-mean-curvature hypersurfaces of revolution.

A curve in the upper half plane (axis L is y = 0) is parametrized by arc
length t with tangent angle theta.  Rotating it about L in R^n sweeps out a
hypersurface whose mean curvature H is measured against the normal
N = (sin theta, -cos theta), i.e. the tangent turned clockwise.  H is the
average of the principal curvatures, so a sphere of radius r has H = 1/r.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from . import _rk
from .errors import DomainError, NoSuchPoint

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_EPS_AXIS = 1e-9
DEFAULT_ZERO_TOL = 1e-12
FORCE_DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class CurveState:
    x: float
    y: float
    theta: float
    t: float = 0.0

    def position(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class DelaunayParams:
    n: int
    H: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"dimension must be an integer >= 3, got {self.n!r}")
        if not math.isfinite(self.H):
            raise DomainError(f"mean curvature must be finite, got {self.H!r}")


class DelaunayClass(str, Enum):
    CATENOID_TYPE = "CatenoidType"
    NODOID = "Nodoid"
    UNDULOID_OR_CYLINDER = "UnduloidOrCylinder"
    VERTICAL_HYPERPLANE = "VerticalHyperplane"
    SPHERE = "Sphere"
    CYLINDER = "Cylinder"

    def __str__(self):
        return self.value


def _check_y(y):
    if not y > 0.0:
        raise DomainError(f"state must lie strictly above the axis, got y={y!r}")


def force(state, params):
    """Conserved force y^(n-2) (cos theta - H y) of the curve through ``state``."""
    _check_y(state.y)
    return state.y ** (params.n - 2) * (math.cos(state.theta) - params.H * state.y)


def evaluate_ode(state, params):
    """Return (dx, dy, dtheta, ddtheta) at ``state``.

    ddtheta uses the closed form -(n-1)(n-2) F sin(theta) / y^n with F taken
    from the state itself.
    """
    _check_y(state.y)
    n, H = params.n, params.H
    c, s = math.cos(state.theta), math.sin(state.theta)
    dtheta = -(n - 1) * H + (n - 2) * c / state.y
    F = force(state, params)
    ddtheta = -(n - 1) * (n - 2) * F * s / state.y**n
    return c, s, dtheta, ddtheta


def cylinder_force(n, H):
    """Force of the cylinder with mean curvature H (0 when H = 0)."""
    if H == 0.0:
        return 0.0
    radius = (n - 2) / ((n - 1) * abs(H))
    return math.copysign(radius ** (n - 2) / (n - 1), H)


def classify(n, H, F, zero_tol=DEFAULT_ZERO_TOL, scale=1.0):
    """Delaunay type from the signs of (H, F).

    ``scale`` is a length of the curve (its starting height); H and F are made
    dimensionless with it before the sign tests.
    """
    if n < 3:
        raise DomainError("classification needs n >= 3")
    if zero_tol <= 0:
        raise DomainError("zero_tol must be positive")
    h = H * scale
    f = F / scale ** (n - 2)
    h_zero = abs(h) <= zero_tol
    f_zero = abs(f) <= zero_tol
    if h_zero and f_zero:
        return DelaunayClass.VERTICAL_HYPERPLANE
    if h_zero:
        return DelaunayClass.CATENOID_TYPE
    if f_zero:
        return DelaunayClass.SPHERE
    if h * f < 0:
        return DelaunayClass.NODOID
    f_cyl = cylinder_force(n, h)
    if abs(f - f_cyl) <= zero_tol * max(1.0, abs(f_cyl)):
        return DelaunayClass.CYLINDER
    return DelaunayClass.UNDULOID_OR_CYLINDER


def state_from_invariants(params, F, y, ascending=True):
    """The state at height ``y`` on the (H, F) curve, with x = t = 0."""
    _check_y(y)
    c = F / y ** (params.n - 2) + params.H * y
    if abs(c) > 1.0:
        if abs(c) - 1.0 > 1e-13:
            raise NoSuchPoint(f"curve with H={params.H}, F={F} never reaches y={y} (cos={c})")
        c = math.copysign(1.0, c)
    theta = math.acos(c)
    return CurveState(0.0, y, theta if ascending else -theta, 0.0)


def heights_at_angle(params, F, theta, y_max=None):
    """All heights at which the (H, F) curve has tangent angle ``theta``.

    Solves y^(n-2) (cos theta - H y) = F for y > 0.
    """
    n, H = params.n, params.H
    c = math.cos(theta)

    def g(y):
        return y ** (n - 2) * (c - H * y) - F

    if y_max is None:
        cands = [1.0, abs(F) ** (1.0 / max(n - 2, 1)) if F else 1.0]
        if H:
            cands.append(abs(1.0 / H))
        y_max = 10.0 * max(cands) + 10.0
    # g is a polynomial with at most two positive roots for n >= 3
    # (one sign change of its derivative); bracket around its extremum.
    roots = []
    if H != 0.0 and c * H > 0:
        y_ext = (n - 2) * c / ((n - 1) * H)
        lo, hi = 0.0, y_ext
        if g(lo + 1e-300) * g(hi) < 0:
            roots.append(brentq(g, 1e-300, hi, xtol=1e-15, rtol=1e-15))
        if g(y_ext) * g(y_max) < 0:
            roots.append(brentq(g, y_ext, y_max, xtol=1e-15, rtol=1e-15))
        elif g(y_ext) == 0.0:
            roots.append(y_ext)
    else:
        ys = np.geomspace(1e-12, y_max, 400)
        vals = [g(v) for v in ys]
        for a, b, ga, gb in zip(ys[:-1], ys[1:], vals[:-1], vals[1:]):
            if ga == 0.0:
                roots.append(float(a))
            elif ga * gb < 0:
                roots.append(brentq(g, a, b, xtol=1e-15, rtol=1e-15))
    return sorted(r for r in roots if r > 0)


@dataclass(frozen=True)
class StopSpec:
    """When to stop a trace.  ``length`` is always enforced."""

    length: float
    axis: bool = False
    eps_axis: float = DEFAULT_EPS_AXIS
    vertical: bool = False
    angle: float | None = None
    height: float | None = None
    x_min: float | None = None
    x_max: float | None = None
    max_step: float | None = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL


def _rhs_factory(n, H, F=None):
    nm1, nm2 = n - 1, n - 2
    if F is None:

        def rhs(s):
            y = s[1]
            if y <= 0.0:
                raise _rk.OutOfDomain
            c = math.cos(s[2])
            return (c, math.sin(s[2]), -nm1 * H + nm2 * c / y)

    else:
        # theta' rewritten with the first integral; identical on the curve
        # but with no unstable mode near the axis.
        def rhs(s):
            y = s[1]
            if y <= 0.0:
                raise _rk.OutOfDomain
            th = s[2]
            return (math.cos(th), math.sin(th), -H + nm2 * F / y**nm1)

    return rhs


def _weights_factory(n, H):
    # x is translation invariant and theta periodic: weigh every component by
    # the local feature size (height, or radius of curvature of the generating
    # curve and of the surface) instead of by their unbounded magnitudes
    nm1, nm2 = n - 1, n - 2
    aH = abs(H)

    def weights(a, b):
        y = min(a[1], b[1])
        k = max(aH, abs(nm2 * math.cos(a[2]) / a[1] - nm1 * H), 1e-300)
        w = min(y, 1.0 / k)
        return (w, w, min(w, 1.0))

    return weights


def _char_length(y0, H):
    if H == 0.0:
        return y0
    return min(y0, 1.0 / abs(H))


@dataclass
class GeneratingCurve:
    params: DelaunayParams
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    force: float
    events: list = field(default_factory=list)
    cls: DelaunayClass = DelaunayClass.UNDULOID_OR_CYLINDER
    conserve_force: bool = False
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def __len__(self):
        return len(self.t)

    def state(self, i):
        return CurveState(float(self.x[i]), float(self.y[i]), float(self.theta[i]), float(self.t[i]))

    @property
    def states(self):
        return [self.state(i) for i in range(len(self.t))]

    @property
    def start(self):
        return self.state(0)

    @property
    def end(self):
        return self.state(len(self.t) - 1)

    @property
    def length(self):
        return float(self.t[-1] - self.t[0])

    @property
    def event(self):
        """Kind of the terminating event, or 'length'."""
        return self.events[-1][0] if self.events else "length"

    def forces(self):
        n, H = self.params.n, self.params.H
        return self.y ** (n - 2) * (np.cos(self.theta) - H * self.y)

    def force_drift(self):
        return float(np.max(np.abs(self.forces() - self.force)))

    def _rhs(self):
        F = self.force if self.conserve_force else None
        return _rhs_factory(self.params.n, self.params.H, F)

    def state_at(self, t):
        """State at arc length ``t``, integrated from the nearest stored state."""
        if t < self.t[0] - 1e-12 or t > self.t[-1] + 1e-12:
            raise DomainError(f"t={t} outside [{self.t[0]}, {self.t[-1]}]")
        k = bisect.bisect_right(self.t, t) - 1
        k = min(max(k, 0), len(self.t) - 1)
        h = t - self.t[k]
        if h <= 0.0:
            return self.state(k)
        y, _, _ = _rk.dp_step(self._rhs(), (self.x[k], self.y[k], self.theta[k]), h)
        return CurveState(y[0], y[1], y[2], float(t))

    def translated(self, dx):
        return replace(self, x=self.x + dx, events=[(k, replace(s, x=s.x + dx)) for k, s in self.events])

    def reversed(self):
        """Same point set traversed backwards; H and F change sign."""
        T = self.t[-1]
        params = DelaunayParams(self.params.n, -self.params.H)
        return replace(
            self,
            params=params,
            t=(T - self.t)[::-1].copy(),
            x=self.x[::-1].copy(),
            y=self.y[::-1].copy(),
            theta=(self.theta + math.pi)[::-1].copy(),
            force=-self.force,
            events=[],
            cls=self.cls,
        )

    def reflected(self):
        """Mirror image under x -> -x, keeping the direction of travel."""
        params = DelaunayParams(self.params.n, -self.params.H)
        return replace(
            self,
            params=params,
            x=-self.x,
            theta=math.pi - self.theta,
            force=-self.force,
            events=[(k, CurveState(-s.x, s.y, math.pi - s.theta, s.t)) for k, s in self.events],
        )

    def segment(self, t0, t1):
        """Sub-curve on [t0, t1], re-based so that it starts at t = 0."""
        if not t0 < t1:
            raise DomainError("segment needs t0 < t1")
        a, b = self.state_at(t0), self.state_at(t1)
        inner = (self.t > t0) & (self.t < t1)
        t = np.concatenate([[t0], self.t[inner], [t1]]) - t0
        x = np.concatenate([[a.x], self.x[inner], [b.x]])
        y = np.concatenate([[a.y], self.y[inner], [b.y]])
        th = np.concatenate([[a.theta], self.theta[inner], [b.theta]])
        return replace(self, t=t, x=x, y=y, theta=th, events=[])

    def vertical_crossings(self, tol=1e-10):
        """Indices i where cos(theta) changes sign between samples i and i+1."""
        c = np.cos(self.theta)
        return [
            i
            for i in range(len(c) - 1)
            if abs(c[i]) > tol and abs(c[i + 1]) > tol and (c[i] > 0) != (c[i + 1] > 0)
        ] + [i for i in range(1, len(c) - 1) if abs(c[i]) <= tol]


def trace(initial, params, stop, *, conserve_force=False, zero_tol=DEFAULT_ZERO_TOL):
    """Integrate the generating-curve ODE from ``initial``.

    The trace ends at the first requested event or at ``stop.length``.  With
    ``conserve_force`` the angle equation is closed with the initial force
    (theta' = -H + (n-2) F / y^(n-1)); a force below ``zero_tol`` is then
    snapped to exactly zero so spheres stay exact circles down to the axis.
    """
    _check_y(initial.y)
    if stop.length < 0 or not math.isfinite(stop.length):
        raise DomainError(f"bad trace length {stop.length!r}")
    n, H = params.n, params.H
    F0 = force(initial, params)
    scale = initial.y
    cls = classify(n, H, F0, zero_tol, scale)
    if conserve_force and cls in (DelaunayClass.SPHERE, DelaunayClass.VERTICAL_HYPERPLANE):
        F0 = 0.0
    rhs = _rhs_factory(n, H, F0 if conserve_force else None)

    events = []
    if stop.axis:
        eps = stop.eps_axis
        events.append(_rk.Event("axis", lambda s: s[1] - eps))
    if stop.vertical:
        events.append(_rk.Event("vertical", lambda s: math.cos(s[2])))
    if stop.angle is not None:
        phi = stop.angle
        events.append(_rk.Event("angle", lambda s: s[2] - phi))
    if stop.height is not None:
        ys = stop.height
        events.append(_rk.Event("height", lambda s: s[1] - ys))
    if stop.x_min is not None:
        xa = stop.x_min
        events.append(_rk.Event("x_min", lambda s: s[0] - xa))
    if stop.x_max is not None:
        xb = stop.x_max
        events.append(_rk.Event("x_max", lambda s: s[0] - xb))

    char = _char_length(scale, H)
    max_step = stop.max_step if stop.max_step is not None else 0.05 * char
    sol = _rk.integrate(
        rhs,
        (initial.x, initial.y, initial.theta),
        stop.length,
        max_step=max_step,
        rtol=stop.rtol,
        atol=stop.atol,
        events=events,
        h0=0.1 * max_step,
        h_min=1e-15 * char,
        weights=_weights_factory(n, H),
    )
    arr = np.asarray(sol.ys, dtype=float)
    ts = np.asarray(sol.ts, dtype=float) + initial.t
    curve = GeneratingCurve(
        params=params,
        t=ts,
        x=arr[:, 0].copy(),
        y=arr[:, 1].copy(),
        theta=arr[:, 2].copy(),
        force=F0,
        cls=cls,
        conserve_force=conserve_force,
        rtol=stop.rtol,
        atol=stop.atol,
    )
    if sol.event is not None:
        curve.events.append((sol.event.name, curve.end))
    return curve
