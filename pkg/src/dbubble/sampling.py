"""Random admissible Delaunay curves for sweeps and property tests."""

from __future__ import annotations

import math

from .delaunay import DelaunayParams, cylinder_force, heights_at_angle, state_from_invariants


def log_uniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def random_curve_params(rng, n, kind="any", h_range=(0.1, 10.0)):
    """Draw (params, F) at the natural scale 1/|H| of the curve.

    ``kind`` is 'unduloid', 'nodoid' or 'any'.  F is drawn as a multiple of the
    cylinder force, so unduloids have F/F_cyl in (0, 1) and nodoids
    F/F_cyl in (-3, 0).
    """
    H = log_uniform(rng, *h_range)
    if rng.uniform() < 0.5:
        H = -H
    fc = cylinder_force(n, H)
    if kind == "any":
        kind = "unduloid" if rng.uniform() < 0.5 else "nodoid"
    if kind == "unduloid":
        u = rng.uniform(0.02, 0.98)
    elif kind == "nodoid":
        u = -rng.uniform(0.02, 3.0)
    else:
        raise ValueError(kind)
    return DelaunayParams(n, H), u * fc


def start_state(params, F):
    """A state on the (H, F) curve where it is horizontal (theta = 0 or pi)."""
    for theta in (0.0, math.pi):
        ys = heights_at_angle(params, F, theta)
        if ys:
            s = state_from_invariants(params, F, ys[0], ascending=True)
            return s
    raise ValueError(f"no horizontal point on curve H={params.H}, F={F}")


def unit_height_curve(rng, n):
    """Random unduloid or nodoid, rescaled so that its highest point is y = 1.

    Returns (params, start_state) with the start at the top of the curve.
    """
    H0 = 1.0 if rng.uniform() < 0.5 else -1.0
    fc = cylinder_force(n, H0)
    u = rng.uniform(0.02, 0.98) if rng.uniform() < 0.5 else -rng.uniform(0.02, 3.0)
    p0 = DelaunayParams(n, H0)
    F0 = u * fc
    tops = heights_at_angle(p0, F0, 0.0) + heights_at_angle(p0, F0, math.pi)
    lam = 1.0 / max(tops)
    params = DelaunayParams(n, H0 / lam)
    F = F0 * lam ** (n - 2)
    s = state_from_invariants(params, F, 1.0)
    return params, s


def random_junction(rng, n, y_range=(0.2, 2.0), h_range=(-5.0, 5.0)):
    """A 120 degree vertex with outgoing curvatures summing to zero."""
    from .junctions import Incidence, VertexGeometry

    x = rng.uniform(-3.0, 3.0)
    y = log_uniform(rng, *y_range)
    th0 = rng.uniform(-math.pi, math.pi)
    h1, h2 = rng.uniform(*h_range, size=2)
    hs = (h1, h2, -(h1 + h2))
    inc = tuple(
        Incidence(f"g{k}", "start", th0 + k * 2.0 * math.pi / 3.0, float(hs[k])) for k in range(3)
    )
    return VertexGeometry((x, y), inc)
