"""Geometry of one face: three mutually tangent generalized hyperbolic circles.

A generalized circle of geodesic curvature ``k`` is a circle (k > 1), a
horocycle (k = 1) or a hypercycle (k < 1). On the hyperboloid sheet
``{<x,x> = -1, x0 > 0}`` with ``<x,y> = -x0*y0 + x1*y1 + x2*y2`` every such
curve is the level set ``<x,w> = -1`` of a vector ``w`` with
``<w,w> = k**-2 - 1``. The generalized disk bounded by the curve is
``<x,w> > -1`` (it contains the center, the ideal point or the axis), and two
disks are externally tangent exactly when ``<w_a,w_b> = -(1 + 1/(k_a k_b))``.

Three tangent curves are therefore fixed up to isometry by their Gram matrix,
and everything below is computed from that matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# |K| below this is treated as an exact horocycle when building vectors
HOROCYCLE_EPS = 1e-8
# series branch for the arc kernel
_SERIES_CUTOFF = 1e-2
_SERIES_TERMS = 14


class GeometryError(ValueError):
    """Invalid input to, or an impossible state inside, the face geometry."""


class DegenerateGeometryError(GeometryError):
    """The tangency construction failed; signals an implementation fault."""


class CurvatureClass(str, Enum):
    HYPERCYCLE = "hypercycle"
    HOROCYCLE = "horocycle"
    CIRCLE = "circle"


def _check_curvature(k) -> float:
    try:
        k = float(k)
    except (TypeError, ValueError):
        raise GeometryError(f"curvature must be a real number, got {k!r}") from None
    if not math.isfinite(k) or k <= 0.0:
        raise GeometryError(f"curvature must be positive and finite, got {k!r}")
    return k


def classify(k: float) -> CurvatureClass:
    """Class of a generalized circle by exact comparison of ``k`` with 1."""
    k = _check_curvature(k)
    if k < 1.0:
        return CurvatureClass.HYPERCYCLE
    if k == 1.0:
        return CurvatureClass.HOROCYCLE
    return CurvatureClass.CIRCLE


@dataclass(frozen=True)
class GeneralizedCircle:
    k: float

    def __post_init__(self):
        object.__setattr__(self, "k", _check_curvature(self.k))

    @classmethod
    def from_log(cls, K: float) -> "GeneralizedCircle":
        return cls(math.exp(K))

    @property
    def K(self) -> float:
        return math.log(self.k)

    @property
    def cls(self) -> CurvatureClass:
        return classify(self.k)


def edge_length(k_i: float, k_j: float) -> float:
    """Distance between the centers/axes of two tangent generalized circles.

    ``arccoth k`` is the radius of a circle and ``arctanh k`` the distance of
    a hypercycle from its axis; a horocycle makes the length infinite.
    """
    total = 0.0
    for k in (_check_curvature(k_i), _check_curvature(k_j)):
        if k == 1.0:
            return math.inf
        total += math.atanh(k) if k < 1.0 else math.atanh(1.0 / k)
    return total


def mink(x, y):
    """Signature (2,1) bilinear form, broadcasting over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] + x[..., 2] * y[..., 2]


@dataclass(frozen=True)
class MinkowskiRep:
    """Vector ``w`` whose level set ``<x,w> = -1`` on the sheet is the curve."""

    w: np.ndarray

    @property
    def norm2(self) -> float:
        return float(mink(self.w, self.w))

    def disk_circle(self):
        """Image in the Poincare disk as ``(center, radius)``, or ``None`` for a line."""
        w0, w1, w2 = (float(c) for c in self.w)
        if abs(w0 + 1.0) < 1e-14:
            return None
        c = complex(w1, w2) / (w0 + 1.0)
        r2 = abs(c) ** 2 - (w0 - 1.0) / (w0 + 1.0)
        return c, math.sqrt(max(r2, 0.0))


def minkowski_rep(circle: GeneralizedCircle) -> MinkowskiRep:
    """Canonical vector: circle centered at the base point, horocycle and
    hypercycle passing through or around it."""
    K = circle.K
    if abs(K) < HOROCYCLE_EPS:
        # horocycle through the base point (1, 0, 0)
        return MinkowskiRep(np.array([1.0, 0.0, 1.0]))
    n2 = -math.expm1(-2.0 * K)  # 1 - k**-2
    if K > 0:
        return MinkowskiRep(np.array([math.sqrt(n2), 0.0, 0.0]))
    return MinkowskiRep(np.array([0.0, 0.0, math.sqrt(-n2)]))


def gram_matrix(k_i: float, k_j: float, k_k: float) -> np.ndarray:
    """Gram matrix of the vectors of three mutually tangent generalized circles."""
    ks = [_check_curvature(k) for k in (k_i, k_j, k_k)]
    G = np.empty((3, 3))
    for a in range(3):
        Ka = math.log(ks[a])
        G[a, a] = 0.0 if abs(Ka) < HOROCYCLE_EPS else math.expm1(-2.0 * Ka)
        for b in range(a + 1, 3):
            G[a, b] = G[b, a] = -(1.0 + 1.0 / (ks[a] * ks[b]))
    return G


# ---------------------------------------------------------------------------
# arc kernel
#
# With q = 1/((k_a+k_b)(k_a+k_c)) the Minkowski chord between the two tangency
# points on curve a is 2*sqrt(q), and the total geodesic curvature of the arc
# between them is 2*k_a*sqrt(q)*S((k_a**2 - 1)*q), where
#     S(x) = arcsin(sqrt x)/sqrt x    (x > 0, circles)
#          = arcsinh(sqrt -x)/sqrt -x (x < 0, hypercycles)
# which is analytic through x = 0 (horocycles).
# ---------------------------------------------------------------------------

def _series_coeffs(n):
    a = np.empty(n)
    a[0] = 1.0
    for i in range(1, n):
        a[i] = a[i - 1] * (2 * i - 1) / (2 * i)
    return a


_A = _series_coeffs(_SERIES_TERMS)
_S_COEF = _A / (2 * np.arange(_SERIES_TERMS) + 1)
_DS_COEF = (np.arange(1, _SERIES_TERMS) * _A[1:]) / (2 * np.arange(1, _SERIES_TERMS) + 1)


def _kernel_S(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    pos = (x > 0) & ~small
    neg = (x < 0) & ~small
    out[small] = np.polynomial.polynomial.polyval(x[small], _S_COEF)
    r = np.sqrt(x[pos])
    out[pos] = np.arcsin(r) / r
    r = np.sqrt(-x[neg])
    out[neg] = np.arcsinh(r) / r
    return out


def _kernel_dS(x, S, inv_sqrt_1mx):
    """S'(x) = (1/sqrt(1-x) - S(x)) / (2x)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    out[small] = np.polynomial.polynomial.polyval(x[small], _DS_COEF)
    big = ~small
    out[big] = (inv_sqrt_1mx[big] - S[big]) / (2.0 * x[big])
    return out


_ROLL = np.array([[0, 1, 2], [1, 2, 0], [2, 0, 1]])


def _rolled(K3):
    """Own, next and next-next log-curvature for every slot, each (..., 3)."""
    R = K3[..., _ROLL]
    return R[..., 0], R[..., 1], R[..., 2]


def arc_curvature(Ka, Kb, Kc):
    """Total geodesic curvature of the arc of curve ``a`` cut out by ``b``, ``c``.

    Vectorized over log-curvatures. Smooth in all three arguments.
    """
    Ka, Kb, Kc = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (Ka, Kb, Kc)))
    ka, kb, kc = np.exp(Ka), np.exp(Kb), np.exp(Kc)
    q = 1.0 / ((ka + kb) * (ka + kc))
    x = np.expm1(2.0 * Ka) * q  # expm1: k_a**2 - 1 without cancellation near K = 0
    return 2.0 * ka * np.sqrt(q) * _kernel_S(x)


def face_arcs(K3: np.ndarray) -> np.ndarray:
    """Arcs at the three slots for log-curvatures of shape (..., 3)."""
    return arc_curvature(*_rolled(np.asarray(K3, dtype=float)))


def face_jacobian(K3: np.ndarray) -> np.ndarray:
    """Analytic d(arc_a)/d(K_b) for log-curvatures of shape (..., 3) -> (..., 3, 3).

    Off-diagonal entries are ``-k_a k_b / ((k_a + k_b) sqrt(P))`` with
    ``P = k_a k_b + k_b k_c + k_c k_a + 1``, manifestly symmetric.
    """
    K3 = np.asarray(K3, dtype=float)
    k = np.exp(K3)
    P = k[..., 0] * k[..., 1] + k[..., 1] * k[..., 2] + k[..., 2] * k[..., 0] + 1.0
    sqrtP = np.sqrt(P)[..., None]
    kk = k[..., :, None] * k[..., None, :]
    J = -kk / ((k[..., :, None] + k[..., None, :]) * sqrtP[..., None])

    Ka, _, _ = _rolled(K3)
    ka, kb, kc = _rolled(k)
    q = 1.0 / ((ka + kb) * (ka + kc))
    x = np.expm1(2.0 * Ka) * q
    sq = np.sqrt(q)
    S = _kernel_S(x)
    dS = _kernel_dS(x, S, 1.0 / (sqrtP * sq))  # 1 - x = P*q
    sigma = 1.0 / (ka + kb) + 1.0 / (ka + kc)
    diag = 2.0 * ka * sq * S - ka * ka * sigma / sqrtP + 4.0 * ka**3 * q * sq * dS
    idx = np.arange(3)
    J[..., idx, idx] = diag
    return J


def fd_face_jacobian(K3, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of :func:`face_arcs` in log-curvature."""
    K3 = np.asarray(K3, dtype=float)
    J = np.empty(K3.shape + (3,))
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        J[..., :, b] = (face_arcs(K3 + e) - face_arcs(K3 - e)) / (2.0 * h)
    return J


# ---------------------------------------------------------------------------
# explicit construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThreeCircleConfig:
    curvatures: tuple
    arcs: np.ndarray
    area: float
    vectors: np.ndarray  # rows w_i, w_j, w_k
    tangency_points: np.ndarray  # rows p_jk, p_ki, p_ij (opposite slot order)

    @property
    def classes(self):
        return tuple(classify(k) for k in self.curvatures)

    def reps(self):
        return [MinkowskiRep(w) for w in self.vectors]


def _factor_gram(G):
    """Rows W with W J W^T = G, J = diag(-1, 1, 1)."""
    # congruence scaling keeps every entry in [-1, 1] before the eigensolve
    s = np.sqrt(np.abs(np.diag(G)) + 1.0)
    Gs = G / np.outer(s, s)
    mu, U = np.linalg.eigh(Gs)
    if not (mu[0] < 0 < mu[1]) or min(abs(mu)) < 1e-13:
        raise DegenerateGeometryError(
            f"Gram matrix eigenvalues {mu} do not resolve signature (2,1) in double precision")
    # eigh sorts ascending: the single negative eigenvalue is the time axis
    return (U * np.sqrt(np.abs(mu))) * s[:, None]


def _normalize_position(W, P):
    """Boost/rotate so the normalized sum of tangency points is the base point
    and the point opposite slot 0 lies on the positive x1 axis."""
    c = P.sum(axis=0)
    c = c / math.sqrt(-mink(c, c))
    # boost taking c to e0
    e0 = np.array([1.0, 0.0, 0.0])
    g = c[0]
    v = c[1:]
    B = np.eye(3)
    if np.linalg.norm(v) > 0:
        B[0, 0] = g
        B[0, 1:] = -v
        B[1:, 0] = -v
        B[1:, 1:] = np.eye(2) + np.outer(v, v) / (1.0 + g)
    W = W @ B.T
    P = P @ B.T
    assert np.allclose(B @ c, e0, atol=1e-9)
    th = math.atan2(P[0, 2], P[0, 1])
    R = np.array([[1.0, 0, 0], [0, math.cos(th), math.sin(th)], [0, -math.sin(th), math.cos(th)]])
    return W @ R.T, P @ R.T


def solve_config(k_i: float, k_j: float, k_k: float) -> ThreeCircleConfig:
    """Realize three mutually tangent generalized circles and measure the arcs
    bounding their curvilinear triangle.

    Returns the three arc total geodesic curvatures (slot order i, j, k), the
    area ``pi - sum(arcs)`` of the enclosed region, the realizing vectors and
    the tangency points.
    """
    ks = tuple(_check_curvature(k) for k in (k_i, k_j, k_k))
    G = gram_matrix(*ks)
    W = _factor_gram(G)
    kk = np.array(ks)
    P = np.empty((3, 3))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        # tangency point of b and c lies in span(w_b, w_c)
        P[a] = (kk[b] * W[b] + kk[c] * W[c]) / (kk[b] + kk[c])
    if np.all(P[:, 0] < 0):
        W[:, 0] *= -1.0
        P[:, 0] *= -1.0
    if not np.all(P[:, 0] > 0):
        raise DegenerateGeometryError("tangency points lie on different sheets")
    if not np.allclose(mink(P, P), -1.0, rtol=0, atol=1e-7 * max(1.0, np.abs(P).max() ** 2)):
        raise DegenerateGeometryError("tangency points are off the hyperboloid")
    W, P = _normalize_position(W, P)

    arcs = face_arcs(np.log(kk))
    area = math.pi - float(arcs.sum())
    return ThreeCircleConfig(curvatures=ks, arcs=arcs, area=area, vectors=W, tangency_points=P)


def config_jacobian(k_i: float, k_j: float, k_k: float, method: str = "analytic", h: float = 1e-5) -> np.ndarray:
    """3x3 matrix of d(arc_a)/d(K_b); ``method`` is ``"analytic"`` or ``"fd"``."""
    K3 = np.log([_check_curvature(k) for k in (k_i, k_j, k_k)])
    if method == "analytic":
        return face_jacobian(K3)
    if method == "fd":
        return fd_face_jacobian(K3, h)
    raise ValueError(f"unknown method {method!r}")


def area_gradient(k_i: float, k_j: float, k_k: float) -> np.ndarray:
    """d(area)/d(K_a) for the three slots."""
    return -config_jacobian(k_i, k_j, k_k).sum(axis=0)
