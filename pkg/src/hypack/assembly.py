"""Global curvature map K -> L, its Jacobian and the Laplace-type operators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hypgeom import classify, face_arcs, face_jacobian
from .surface import TriangulatedSurface

SYMMETRY_TOL = 1e-7
EIGEN_FLOOR = 1e-12


class AssemblyError(RuntimeError):
    """Assembled Jacobian violates an identity it must satisfy."""


class SpectralDegeneracyError(AssemblyError):
    """An eigenvalue of the Jacobian is too small for a fractional power."""


class QuadratureError(ArithmeticError):
    """Energy quadrature failed to settle."""


def _as_state(surface: TriangulatedSurface, K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape[-1] != surface.n_vertices:
        raise ValueError(f"state has {K.shape[-1]} entries, surface has {surface.n_vertices} vertices")
    if not np.all(np.isfinite(K)):
        raise ValueError("state must be finite")
    return K


def total_curvature(surface: TriangulatedSurface, K) -> np.ndarray:
    """Total geodesic curvature at each vertex; ``K`` may be batched (..., n)."""
    K = _as_state(surface, K)
    n = surface.n_vertices
    flat = K.reshape(-1, n)
    m = len(flat)
    arcs = face_arcs(flat[:, surface.faces])  # (m, F, 3)
    # bincount sums sequentially in face order, so the result is reproducible
    idx = (surface.faces[None, :, :] + n * np.arange(m)[:, None, None]).ravel()
    L = np.bincount(idx, weights=arcs.ravel(), minlength=m * n)
    return L.reshape(K.shape)


def calabi_energy(L, L_hat) -> float:
    """Squared curvature deviation ``||L - L_hat||^2``."""
    r = np.asarray(L, dtype=float) - np.asarray(L_hat, dtype=float)
    return float(r @ r)


@dataclass(frozen=True)
class EdgeWeights:
    edges: np.ndarray  # (E, 2), i < j
    values: np.ndarray  # (E,)

    def matrix(self, n: int) -> np.ndarray:
        """Graph-Laplacian-like matrix with off-diagonals ``B_ij`` and
        diagonal ``-sum_j B_ij``."""
        M = np.zeros((n, n))
        i, j = self.edges[:, 0], self.edges[:, 1]
        M[i, j] = self.values
        M[j, i] = self.values
        M[np.diag_indices(n)] = -M.sum(axis=1)
        return M


@dataclass(frozen=True)
class JacobianMatrix:
    """``Lam = dL/dK`` with its split ``Lam = -diag(A) + Lambda_B``."""

    Lam: np.ndarray
    A: np.ndarray
    B: EdgeWeights

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def Lambda_A(self) -> np.ndarray:
        return np.diag(self.A)

    @property
    def Lambda_B(self) -> np.ndarray:
        return self.B.matrix(self.n)

    def reconstruct(self) -> np.ndarray:
        return -self.Lambda_A + self.Lambda_B


def jacobian(surface: TriangulatedSurface, K) -> JacobianMatrix:
    """Assemble ``dL/dK`` from the per-face 3x3 blocks.

    ``B_ij`` sums the cross derivatives of the two faces sharing edge ``ij``;
    ``A_i`` is the derivative of the total area of the faces around ``i``.
    """
    K = _as_state(surface, K)
    n = surface.n_vertices
    faces = surface.faces
    blocks = face_jacobian(K[faces])  # (F, 3, 3)
    pair = (faces[:, :, None] * n + faces[:, None, :]).ravel()
    Lam = np.bincount(pair, weights=blocks.ravel(), minlength=n * n).reshape(n, n)

    asym = np.abs(Lam - Lam.T).max()
    if asym > SYMMETRY_TOL:
        raise AssemblyError(f"Jacobian asymmetry {asym:.3e} exceeds {SYMMETRY_TOL}")

    # face area is pi - sum(arcs), so d(area)/dK_b = -sum_a block[a, b]
    dArea = -blocks.sum(axis=1)
    A = np.bincount(faces.ravel(), weights=dArea.ravel(), minlength=n)

    edges = surface.edges
    Bvals = Lam[edges[:, 0], edges[:, 1]].copy()
    return JacobianMatrix(Lam=Lam, A=A, B=EdgeWeights(edges, Bvals))


def laplace_apply(jac: JacobianMatrix, f) -> np.ndarray:
    """Discrete Laplacian ``-Lam f``."""
    return -(jac.Lam @ np.asarray(f, dtype=float))


@dataclass(frozen=True)
class SpectralDecomposition:
    """``Lam = Q.T @ diag(lambdas) @ Q`` with orthonormal ``Q``."""

    Q: np.ndarray
    lambdas: np.ndarray

    @classmethod
    def of(cls, jac_or_matrix) -> "SpectralDecomposition":
        M = jac_or_matrix.Lam if isinstance(jac_or_matrix, JacobianMatrix) else np.asarray(jac_or_matrix)
        lam, V = np.linalg.eigh(M)
        if not np.all(np.isfinite(lam)) or lam[0] < EIGEN_FLOOR:
            raise SpectralDegeneracyError(f"smallest eigenvalue {lam[0]:.3e} below {EIGEN_FLOOR}")
        return cls(Q=V.T, lambdas=lam)

    def power(self, s: float) -> np.ndarray:
        return self.Q.T @ (self.lambdas[:, None] ** s * self.Q)


def fractional_laplace_apply(spec: SpectralDecomposition, s: float, f) -> np.ndarray:
    """``-Lam**s f`` through the eigendecomposition."""
    f = np.asarray(f, dtype=float)
    if s == 0:
        return -f.copy()
    lam_s = spec.lambdas ** s
    if not np.all(np.isfinite(lam_s)):
        raise SpectralDegeneracyError(f"non-finite eigenvalue power for s={s}")
    return -(spec.Q.T @ (lam_s * (spec.Q @ f)))


def p_laplace_apply(B: EdgeWeights, p: float, f) -> np.ndarray:
    """``sum_{j~i} (-B_ij) |f_j - f_i|**(p-2) (f_j - f_i)``.

    Terms with ``f_j == f_i`` contribute zero for every ``p > 1``.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    f = np.asarray(f, dtype=float)
    i, j = B.edges[:, 0], B.edges[:, 1]
    d = f[j] - f[i]
    ad = np.abs(d)
    flux = np.zeros_like(d)
    nz = ad > 0
    flux[nz] = -B.values[nz] * ad[nz] ** (p - 2.0) * d[nz]
    n = len(f)
    return np.bincount(i, weights=flux, minlength=n) - np.bincount(j, weights=flux, minlength=n)


def p_dirichlet(B: EdgeWeights, p: float, f) -> float:
    """``1/2 sum_i sum_{j~i} B_ij |f_j - f_i|**p``, i.e. one term per edge."""
    f = np.asarray(f, dtype=float)
    d = f[B.edges[:, 1]] - f[B.edges[:, 0]]
    return float(B.values @ np.abs(d) ** p)


# -- energy -----------------------------------------------------------------

def _segment_integral(surface, K0, K1, L_hat, order):
    x, w = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (x + 1.0)
    dK = K1 - K0
    L = total_curvature(surface, K0[None, :] + t[:, None] * dK[None, :])
    return 0.5 * float(w @ ((L - L_hat) @ dK))


def energy_along_path(surface: TriangulatedSurface, path, L_hat, *, order: int = 32,
                      tol: float = 1e-10, max_order: int = 1024) -> float:
    """Line integral of ``sum_i (L_i - L_hat_i) dK_i`` along a polyline."""
    pts = [_as_state(surface, p) for p in path]
    L_hat = np.asarray(L_hat, dtype=float)
    total = 0.0
    for K0, K1 in zip(pts[:-1], pts[1:]):
        if np.array_equal(K0, K1):
            continue
        n = order
        prev = _segment_integral(surface, K0, K1, L_hat, n)
        while True:
            n *= 2
            if n > max_order:
                raise QuadratureError(f"energy quadrature unsettled at order {max_order}")
            cur = _segment_integral(surface, K0, K1, L_hat, n)
            if abs(cur - prev) < tol:
                break
            prev = cur
        total += cur
    return total


def energy(surface: TriangulatedSurface, K, K_base, L_hat, **kw) -> float:
    """Convex energy relative to ``K_base``, integrated along the straight segment."""
    return energy_along_path(surface, [K_base, K], L_hat, **kw)


def min_eigenvalue(jac: JacobianMatrix) -> float:
    return float(np.linalg.eigvalsh(jac.Lam)[0])


def vertex_classes(K) -> list:
    """Class labels of each vertex from log-curvatures."""
    return [classify(math.exp(x)).value for x in np.asarray(K, dtype=float)]
