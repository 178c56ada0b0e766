"""The standard double bubble in R^n: three spherical caps meeting at 120 degrees.

Geometry is fixed by the junction (n-2)-sphere of radius rho in the plane
x = 0 and one angle beta.  At the junction point (0, rho) the three generating
arcs leave with clockwise normals at angles

    right cap   beta
    interface   beta - 2pi/3
    left cap    beta + 2pi/3

so the 120 degree condition is exact.  Each arc is a circle centred on the axis,
which forces H = -sin(normal angle) / rho.  Region 1 is on the left, region 2
on the right, and beta ranges over (-2pi/3, 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NoConvergence
from .junctions import RegionPressures

FLAT_TOL = 1e-9
TWO_THIRDS_PI = 2.0 * math.pi / 3.0
QUAD_RTOL = 1e-13


def unit_ball_volume(k):
    """Volume of the unit ball in R^k."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def unit_sphere_area(k):
    """Area of the unit k-sphere (the boundary of the unit ball in R^(k+1))."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


def _check_cap(n, r, alpha):
    if int(n) != n or n < 3:
        raise DomainError(f"dimension must be an integer >= 3, got {n!r}")
    if not (r > 0 and math.isfinite(r)):
        raise DomainError(f"radius must be positive and finite, got {r!r}")
    if not (0 < alpha <= math.pi):
        raise DomainError(f"cap angle must lie in (0, pi], got {alpha!r}")


def cap_measures(n, r, alpha):
    """(lateral area, enclosed volume) of the cap of polar half-angle ``alpha``.

    Adaptive quadrature; the volume is the part of the n-ball of radius r
    beyond the plane at distance r cos(alpha) from its centre.
    """
    _check_cap(n, r, alpha)
    m = n - 2
    ia, _ = integrate.quad(lambda p: math.sin(p) ** m, 0.0, alpha, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
    area = unit_sphere_area(n - 2) * r ** (n - 1) * ia
    # volume in the angular variable u = r cos(phi) keeps the integrand smooth
    iv, _ = integrate.quad(
        lambda p: math.sin(p) ** n, 0.0, alpha, epsabs=0.0, epsrel=QUAD_RTOL, limit=200
    )
    vol = unit_ball_volume(n - 1) * r**n * iv
    return area, vol


def _sin_power_integral(m, alpha):
    # int_0^alpha sin^m via the regularized incomplete beta function
    a, b = (m + 1) / 2.0, 0.5
    full = special.beta(a, b)
    if alpha <= math.pi / 2:
        return 0.5 * full * special.betainc(a, b, math.sin(alpha) ** 2)
    return full - 0.5 * full * special.betainc(a, b, math.sin(alpha) ** 2)


def cap_measures_closed(n, r, alpha):
    """Same as :func:`cap_measures` through incomplete beta functions."""
    _check_cap(n, r, alpha)
    area = unit_sphere_area(n - 2) * r ** (n - 1) * _sin_power_integral(n - 2, alpha)
    vol = unit_ball_volume(n - 1) * r**n * _sin_power_integral(n, alpha)
    return area, vol


def cap_monte_carlo(n, r, alpha, samples, rng, chunk=1_000_000):
    """Monte-Carlo estimates ((area, se), (volume, se)) of a cap."""
    _check_cap(n, r, alpha)
    c = math.cos(alpha)
    hit_s = hit_b = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        g = rng.standard_normal((k, n))
        norm = np.linalg.norm(g, axis=1)
        hit_s += int(np.count_nonzero(g[:, 0] >= c * norm))
        # uniform in the ball: direction times U^(1/n)
        rad = rng.uniform(size=k) ** (1.0 / n)
        hit_b += int(np.count_nonzero(rad * g[:, 0] / norm >= c))
        done += k
    full_a = unit_sphere_area(n - 1) * r ** (n - 1)
    full_v = unit_ball_volume(n) * r**n
    out = []
    for hits, full in ((hit_s, full_a), (hit_b, full_v)):
        p = hits / samples
        out.append((p * full, math.sqrt(p * (1 - p) / samples) * full))
    return tuple(out)


@dataclass(frozen=True)
class CapGeometry:
    """One cap of the bubble.  ``r`` is inf for the flat disk.

    ``side`` is +1 when the cap lies in x >= 0 and -1 otherwise; ``alpha`` is
    the polar half-angle seen from the centre, measured toward that side.
    """

    n: int
    r: float
    alpha: float
    center_x: float | None
    side: int
    rim: float
    H: float = 0.0  # signed curvature in the junction's outgoing frame

    @property
    def flat(self):
        return math.isinf(self.r)

    def measures(self):
        if self.flat:
            return unit_ball_volume(self.n - 1) * self.rim ** (self.n - 1), 0.0
        return cap_measures(self.n, self.r, self.alpha)

    @property
    def area(self):
        return self.measures()[0]

    @property
    def volume(self):
        return self.measures()[1]


def _cap(n, rho, psi, flat_ref=None):
    """Cap through (0, rho) with outgoing clockwise-normal angle ``psi``."""
    H = -math.sin(psi) / rho
    tx = -math.sin(psi)  # x-part of the outgoing tangent psi + pi/2
    side = 1 if tx > 0 else -1
    if flat_ref is not None and abs(H) < FLAT_TOL * flat_ref:
        return CapGeometry(n, math.inf, math.pi / 2, None, side, rho, 0.0), 0.0
    r = 1.0 / abs(H)
    c = math.cos(psi) / H
    # sin(alpha) = rho / r; atan2 keeps tiny angles of nearly flat caps
    alpha = math.atan2(rho, -side * c)
    return CapGeometry(n, r, alpha, c, side, rho, H), H


@dataclass
class StandardBubble:
    n: int
    caps: tuple  # (left, interface, right)
    rho: float
    beta: float
    pressures: RegionPressures
    volumes: tuple
    targets: tuple
    total_area: float
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def left(self):
        return self.caps[0]

    @property
    def interface(self):
        return self.caps[1]

    @property
    def right(self):
        return self.caps[2]

    @property
    def flat_interface(self):
        return self.interface.flat

    @property
    def radii(self):
        return tuple(c.r for c in self.caps)

    def curvature_cocycle_residual(self):
        """|1/r0 - (1/r1 - 1/r2)| with signed interface curvature."""
        return abs(self.interface.H - (1.0 / self.left.r - 1.0 / self.right.r))

    def volume_residual(self):
        return max(abs(a - b) / b for a, b in zip(self.volumes, self.targets))

    def junction_normals(self):
        """Clockwise-normal angles (left, interface, right) at (0, rho)."""
        b = self.beta
        return (b + TWO_THIRDS_PI, b - TWO_THIRDS_PI, b)

    def as_dict(self):
        return {
            "n": self.n,
            "rho": self.rho,
            "beta": self.beta,
            "radii": list(self.radii),
            "cap_angles": [c.alpha for c in self.caps],
            "centers": [c.center_x for c in self.caps],
            "flat_interface": self.flat_interface,
            "pressures": {"H1": self.pressures.H1, "H2": self.pressures.H2, "H0": self.pressures.H0},
            "volumes": list(self.volumes),
            "targets": list(self.targets),
            "areas": [c.area for c in self.caps],
            "total_area": self.total_area,
            "cocycle_residual": self.curvature_cocycle_residual(),
            "volume_residual": self.volume_residual(),
            "iterations": self.iterations,
        }


def geometry(n, rho, beta):
    """Caps, pressures and region volumes of the bubble with parameters (rho, beta)."""
    if not rho > 0:
        raise DomainError(f"junction radius must be positive, got {rho!r}")
    if not -TWO_THIRDS_PI < beta < 0:
        raise DomainError(f"beta must lie in (-2pi/3, 0), got {beta!r}")
    right, H2 = _cap(n, rho, beta)
    left, mH1 = _cap(n, rho, beta + TWO_THIRDS_PI)
    H1 = -mH1
    interface, _ = _cap(n, rho, beta - TWO_THIRDS_PI, flat_ref=max(abs(H1), abs(H2)))
    VL, VR, V0 = left.volume, right.volume, interface.volume
    if interface.flat:
        v1, v2 = VL, VR
    elif interface.side > 0:
        v1, v2 = VL + V0, VR - V0
    else:
        v1, v2 = VL - V0, VR + V0
    return (left, interface, right), RegionPressures(H1, H2), (v1, v2)


def _residual(n, x, logv):
    rho, beta = math.exp(x[0]), x[1]
    _, _, (v1, v2) = geometry(n, rho, beta)
    if v1 <= 0 or v2 <= 0:
        return None
    return np.array([math.log(v1) - logv[0], math.log(v2) - logv[1]])


def _initial_guess(n, v1, v2):
    R = ((v1 + v2) / unit_ball_volume(n)) ** (1.0 / n)
    # shift the split angle toward the larger region
    q = (v2 - v1) / (v1 + v2)
    beta = -math.pi / 3 - q * (math.pi / 3) * 0.9
    return np.array([math.log(R), beta])


def solve_standard(n, v1, v2, tol=1e-12, max_iter=100):
    """Standard double bubble enclosing volumes v1 (left) and v2 (right)."""
    if int(n) != n or n < 3:
        raise DomainError(f"dimension must be an integer >= 3, got {n!r}")
    if not (v1 > 0 and v2 > 0 and math.isfinite(v1) and math.isfinite(v2)):
        raise DomainError(f"volumes must be positive and finite, got ({v1!r}, {v2!r})")
    n = int(n)
    logv = np.array([math.log(v1), math.log(v2)])
    x = _initial_guess(n, v1, v2)
    r = _residual(n, x, logv)
    hist = []
    lo, hi = -TWO_THIRDS_PI, 0.0
    for it in range(1, max_iter + 1):
        norm = float(np.max(np.abs(r)))
        hist.append((math.exp(x[0]), float(x[1]), norm))
        if norm < tol:
            return _build(n, x, (v1, v2), it - 1, hist)
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-6 * max(1.0, abs(x[j]))
            e = np.zeros(2)
            e[j] = h
            rp, rm = _residual(n, x + e, logv), _residual(n, x - e, logv)
            if rp is None or rm is None:
                raise NoConvergence("Jacobian stencil left the admissible range", hist, _safe_build(n, x, (v1, v2), it, hist))
            J[:, j] = (rp - rm) / (2 * h)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian: {exc}", hist, _safe_build(n, x, (v1, v2), it, hist)) from None
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * dx
            # stay strictly inside the beta range
            if lo < xn[1] < hi:
                rn = _residual(n, xn, logv)
                if rn is not None and np.max(np.abs(rn)) < norm:
                    break
            lam *= 0.5
        else:
            raise NoConvergence("damped step made no progress", hist, _safe_build(n, x, (v1, v2), it, hist))
        x, r = xn, rn
    raise NoConvergence(f"no convergence in {max_iter} iterations", hist, _safe_build(n, x, (v1, v2), max_iter, hist))


def _safe_build(n, x, targets, it, hist):
    try:
        return _build(n, x, targets, it, hist)
    except DomainError:
        return None


def _build(n, x, targets, it, hist):
    rho, beta = math.exp(x[0]), float(x[1])
    caps, pressures, vols = geometry(n, rho, beta)
    area = math.fsum(c.area for c in caps)
    return StandardBubble(n, caps, rho, beta, pressures, vols, tuple(targets), area, it, list(hist))


def equal_volume_oracle(v):
    """Closed form for n = 3 and equal volumes v: (r, rim radius, total area)."""
    r = (8.0 * v / (9.0 * math.pi)) ** (1.0 / 3.0)
    return r, r * math.sqrt(3.0) / 2.0, 27.0 * math.pi * r * r / 4.0
