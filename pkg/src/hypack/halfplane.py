"""Independent numerical construction of a three-circle face in the upper half-plane.

Used as a test oracle only. A Euclidean circle with center height ``y0`` and
radius ``R`` has hyperbolic geodesic curvature ``y0 / R`` (horocycles touch
the real axis, hypercycles cross it), so a face is three externally tangent
Euclidean circles with ``y0 = k R``. Arc curvatures are integrated as
``k * int ds`` with ``ds = |dz| / y`` and the area of the interstice by
Green's theorem, ``area = |oint dx / y|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate


class OracleError(RuntimeError):
    """The quadrature or the construction could not be completed."""


@dataclass(frozen=True)
class EuclidCircle:
    x: float
    y: float
    r: float

    @property
    def center(self):
        return complex(self.x, self.y)


def _third_circle_radii(ka, kc, s):
    beta = (1.0 - s) / (1.0 + s)
    a2 = beta * beta + kc * kc - 1.0
    a1 = 2.0 * beta - 2.0 * ka * kc - 2.0
    a0 = ka * ka
    if abs(a2) < 1e-14 * max(1.0, abs(a1)):
        roots = [-a0 / a1]
    else:
        disc = a1 * a1 - 4.0 * a2 * a0
        if disc < 0:
            return beta, []
        sq = math.sqrt(disc)
        # stable pair of roots
        t = -0.5 * (a1 + math.copysign(sq, a1))
        roots = [t / a2, a0 / t]
    return beta, sorted(r for r in roots if r > 0 and math.isfinite(r))


def _quad(f, a, b):
    val, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
    if not math.isfinite(val) or err > 1e-9:
        raise OracleError(f"quadrature did not converge (estimate {val}, error {err})")
    return val


def _arc_span(c: EuclidCircle, t1: complex, t2: complex):
    p1 = math.atan2(t1.imag - c.y, t1.real - c.x)
    p2 = math.atan2(t2.imag - c.y, t2.real - c.x)
    d = (p2 - p1 + math.pi) % (2.0 * math.pi) - math.pi
    return p1, p1 + d


def _arc_in_halfplane(c: EuclidCircle, p1, p2):
    phi = np.linspace(p1, p2, 2001)
    return bool(np.all(c.y + c.r * np.sin(phi) > 0))


def _tangency(c1: EuclidCircle, c2: EuclidCircle) -> complex:
    d = c2.center - c1.center
    return c1.center + c1.r * d / abs(d)


def build_circles(k_i, k_j, k_k):
    """Three externally tangent Euclidean circles realizing the curvatures,
    with the interstice inside the upper half-plane."""
    ka, kb, kc = (float(k) for k in (k_i, k_j, k_k))
    s = ka / kb
    A = EuclidCircle(0.0, ka, 1.0)
    B = EuclidCircle(1.0 + s, ka, s)
    beta, radii = _third_circle_radii(ka, kc, s)
    for R in radii:
        C = EuclidCircle(1.0 + beta * R, kc * R, R)
        circles = (A, B, C)
        ok = True
        for idx in range(3):
            X, Y, Z = circles[idx], circles[(idx + 1) % 3], circles[(idx + 2) % 3]
            p1, p2 = _arc_span(X, _tangency(X, Y), _tangency(X, Z))
            ok &= _arc_in_halfplane(X, p1, p2)
        if ok:
            return circles
    raise OracleError(f"no half-plane realization found for {(ka, kb, kc)}")


def halfplane_config(k_i, k_j, k_k):
    """Arcs (slot order) and interstice area by quadrature."""
    circles = build_circles(k_i, k_j, k_k)
    ks = (float(k_i), float(k_j), float(k_k))
    arcs = []
    for idx in range(3):
        X, Y, Z = circles[idx], circles[(idx + 1) % 3], circles[(idx + 2) % 3]
        p1, p2 = _arc_span(X, _tangency(X, Y), _tangency(X, Z))
        lo, hi = min(p1, p2), max(p1, p2)
        length = _quad(lambda t, X=X: X.r / (X.y + X.r * math.sin(t)), lo, hi)
        arcs.append(ks[idx] * length)

    # closed loop: arc on A from t_CA to t_AB, on B to t_BC, on C back to t_CA
    green = 0.0
    for idx in range(3):
        X, prev, nxt = circles[idx], circles[(idx + 2) % 3], circles[(idx + 1) % 3]
        p1, p2 = _arc_span(X, _tangency(X, prev), _tangency(X, nxt))
        green += _quad(lambda t, X=X: -X.r * math.sin(t) / (X.y + X.r * math.sin(t)), p1, p2)
    return np.array(arcs), abs(green)


def config_area_numeric(k_i, k_j, k_k) -> float:
    """Hyperbolic area of the curvilinear triangle between the three circles."""
    return halfplane_config(k_i, k_j, k_k)[1]
