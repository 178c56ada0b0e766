"""Dormand-Prince 5(4) integrator for small autonomous systems.

Works on plain tuples of floats; the systems here have three components and
numpy overhead would dominate. Events are localized by root-finding on fresh
sub-steps taken from the start of the step that bracketed the sign change, so
the located state carries the full fifth-order accuracy of the scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .errors import StepFailure

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


class OutOfDomain(Exception):
    """Raised by a right-hand side evaluated outside its domain."""


def _comb(y, h, *pairs):
    out = list(y)
    for c, k in pairs:
        hc = h * c
        for i in range(len(out)):
            out[i] += hc * k[i]
    return tuple(out)


def dp_step(rhs, y, h, k1=None):
    """One Dormand-Prince step. Returns (y_new, err, k7)."""
    if k1 is None:
        k1 = rhs(y)
    k2 = rhs(_comb(y, h, (A21, k1)))
    k3 = rhs(_comb(y, h, (A31, k1), (A32, k2)))
    k4 = rhs(_comb(y, h, (A41, k1), (A42, k2), (A43, k3)))
    k5 = rhs(_comb(y, h, (A51, k1), (A52, k2), (A53, k3), (A54, k4)))
    k6 = rhs(_comb(y, h, (A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)))
    y_new = _comb(y, h, (B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6))
    k7 = rhs(y_new)
    err = tuple(
        h * (E1 * a + E3 * c + E4 * d + E5 * e + E6 * f + E7 * g)
        for a, c, d, e, f, g in zip(k1, k3, k4, k5, k6, k7)
    )
    return y_new, err, k7


def _err_norm(err, y, y_new, rtol, atol, weights=None):
    if weights is not None:
        w = weights(y, y_new)
    else:
        w = [max(abs(a), abs(b)) for a, b in zip(y, y_new)]
    s = 0.0
    for e, wi in zip(err, w):
        s += (e / (atol + rtol * wi)) ** 2
    return math.sqrt(s / len(err))


@dataclass
class Event:
    name: str
    g: object
    payload: object = None


@dataclass
class Solution:
    ts: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    event: Event | None = None
    n_steps: int = 0
    n_rejected: int = 0


def integrate(
    rhs,
    y0,
    length,
    *,
    max_step,
    rtol=1e-10,
    atol=1e-12,
    events=(),
    h0=None,
    h_min=1e-14,
    t_tol=1e-12,
    max_steps=2_000_000,
    weights=None,
):
    """Integrate ``y' = rhs(y)`` from t=0 until ``length`` or the first event.

    ``weights(y, y_new)`` gives the per-component magnitudes the relative
    tolerance applies to; the default is the componentwise max of |y|.
    """
    y = tuple(float(v) for v in y0)
    t = 0.0
    sol = Solution(ts=[0.0], ys=[y])
    if length <= 0:
        return sol
    g_prev = [ev.g(y) for ev in events]
    h = min(max_step, h0 if h0 is not None else 1e-2 * max_step * 10, length)
    k1 = rhs(y)
    while t < length:
        if sol.n_steps >= max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t={t:.6g}")
        h = min(h, max_step, length - t)
        if h < h_min:
            if length - t < h_min:
                break
            raise StepFailure(f"step size underflow at t={t:.17g} (h={h:.3g})")
        try:
            y_new, err, k7 = dp_step(rhs, y, h, k1)
        except OutOfDomain:
            sol.n_rejected += 1
            h *= 0.25
            continue
        en = _err_norm(err, y, y_new, rtol, atol, weights)
        if en > 1.0 or not math.isfinite(en):
            sol.n_rejected += 1
            fac = 0.2 if not math.isfinite(en) else max(0.2, 0.9 * en ** -0.2)
            h *= fac
            continue

        # accepted; look for events inside (t, t+h]
        g_new = [ev.g(y_new) for ev in events]
        hit = None
        for i, ev in enumerate(events):
            a, b = g_prev[i], g_new[i]
            if a != 0.0 and (b == 0.0 or (a < 0.0) != (b < 0.0)):
                tau = _locate(rhs, y, h, k1, ev.g, t_tol)
                if hit is None or tau < hit[0]:
                    hit = (tau, ev)
        if hit is not None:
            tau, ev = hit
            y_ev = dp_step(rhs, y, tau, k1)[0] if tau < h else y_new
            sol.ts.append(t + tau)
            sol.ys.append(y_ev)
            sol.event = ev
            sol.n_steps += 1
            return sol

        t += h
        y = y_new
        k1 = k7
        g_prev = g_new
        sol.ts.append(t)
        sol.ys.append(y)
        sol.n_steps += 1
        fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
        h *= fac
    return sol


def _locate(rhs, y, h, k1, g, t_tol):
    def phi(tau):
        if tau == 0.0:
            return g(y)
        return g(dp_step(rhs, y, tau, k1)[0])

    fa = phi(0.0)
    fb = phi(h)
    if fb == 0.0:
        # walk back to the first zero if the end point sits exactly on it
        return h
    if (fa < 0.0) == (fb < 0.0):
        return h
    return brentq(phi, 0.0, h, xtol=t_tol, rtol=1e-15, maxiter=200)
