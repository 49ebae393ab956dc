"""Curvature flows in log-curvature coordinates, a Newton solver, and rate fitting.

All flows drive ``L(K)`` toward a target ``L_hat``:

* calabi:     dK/dt = -Lam (L - L_hat)
* fractional: dK/dt = -Lam**s (L - L_hat)      (s = 0 is the Ricci flow)
* pcalabi:    dK/dt = (Delta_p + A)(L - L_hat)  (p = 2 is the Calabi flow)
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .assembly import (
    AssemblyError,
    SpectralDecomposition,
    calabi_energy,
    energy,
    fractional_laplace_apply,
    jacobian,
    laplace_apply,
    p_laplace_apply,
    total_curvature,
)
from .hypgeom import GeometryError
from .surface import TriangulatedSurface

log = logging.getLogger(__name__)

DIVERGENCE_BOUND = 50.0
MIN_STEP = 1e-10
GROW_AFTER = 10
GROW_FACTOR = 1.5
NEWTON_MAX_STEP = 1.0


class FlowKind(str, Enum):
    CALABI = "calabi"
    FRACTIONAL = "fractional"
    PCALABI = "pcalabi"
    RICCI = "ricci"


class Status(str, Enum):
    CONVERGED = "converged"
    MAX_TIME = "max_time"
    DIVERGED = "diverged"


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class FlowSpec:
    kind: FlowKind
    target: np.ndarray
    s: float = 1.0
    p: float = 2.0
    step: float = 0.1
    tol: float = 1e-10
    max_time: float = 1e4
    max_steps: int = 200_000

    def __post_init__(self):
        object.__setattr__(self, "kind", FlowKind(self.kind))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))
        if self.kind is FlowKind.FRACTIONAL and self.s == 0:
            # s = 0 is the Ricci flow; alias so both spellings run the same path
            object.__setattr__(self, "kind", FlowKind.RICCI)
        if self.kind is FlowKind.RICCI:
            object.__setattr__(self, "s", 0.0)
        if self.kind is FlowKind.PCALABI and not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if not (self.tol > 0 and self.step > 0 and self.max_time > 0 and self.max_steps > 0):
            raise ValueError("step, tol, max_time and max_steps must be positive")

    @property
    def label(self) -> str:
        if self.kind is FlowKind.FRACTIONAL:
            return f"fractional:{self.s:g}"
        if self.kind is FlowKind.PCALABI:
            return f"pcalabi:{self.p:g}"
        return self.kind.value


def rhs(spec: FlowSpec, surface: TriangulatedSurface, K) -> np.ndarray:
    """Flow vector field at ``K``."""
    K = np.asarray(K, dtype=float)
    r = total_curvature(surface, K) - spec.target
    if spec.kind in (FlowKind.RICCI, FlowKind.FRACTIONAL):
        if spec.s == 0:
            # Lam**0 is the identity; skip the eigensolve
            return fractional_laplace_apply(None, 0.0, r)
        jac = jacobian(surface, K)
        return fractional_laplace_apply(SpectralDecomposition.of(jac), spec.s, r)
    jac = jacobian(surface, K)
    if spec.kind is FlowKind.CALABI:
        return laplace_apply(jac, r)
    return p_laplace_apply(jac.B, spec.p, r) + jac.A * r


@dataclass
class FlowTrace:
    spec: FlowSpec
    times: list = field(default_factory=list)
    K: list = field(default_factory=list)
    L: list = field(default_factory=list)
    calabi: list = field(default_factory=list)
    status: Status | None = None
    reason: str = ""
    accepted: int = 0
    rejected: int = 0
    energy_accepts: int = 0

    def record(self, t, K, L, C):
        self.times.append(float(t))
        self.K.append(np.array(K, dtype=float))
        self.L.append(np.array(L, dtype=float))
        self.calabi.append(float(C))

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def K_final(self) -> np.ndarray:
        return self.K[-1]

    @property
    def L_final(self) -> np.ndarray:
        return self.L[-1]

    @property
    def t_final(self) -> float:
        return self.times[-1]

    def arrays(self):
        return np.array(self.times), np.array(self.K), np.array(self.L), np.array(self.calabi)


def _rk4(f, K, h):
    k1 = f(K)
    k2 = f(K + 0.5 * h * k1)
    k3 = f(K + 0.5 * h * k2)
    k4 = f(K + h * k3)
    return K + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(spec: FlowSpec, surface: TriangulatedSurface, K0) -> FlowTrace:
    """RK4 with Calabi-energy step acceptance.

    A step is accepted when the Calabi energy does not increase; otherwise it
    is halved. After ``GROW_AFTER`` consecutive accepted steps the step grows
    by ``GROW_FACTOR``. For the p-th flow a step that cannot lower the Calabi
    energy at any size down to ``MIN_STEP`` is retried against the convex
    energy instead. Failures are reported in the trace, never raised.
    """
    K = np.array(K0, dtype=float)
    trace = FlowTrace(spec)
    f = lambda x: rhs(spec, surface, x)  # noqa: E731
    t = 0.0
    try:
        L = total_curvature(surface, K)
    except (GeometryError, AssemblyError, ValueError, ArithmeticError) as e:
        trace.status, trace.reason = Status.DIVERGED, f"geometric error: {e}"
        return trace
    C = calabi_energy(L, spec.target)
    trace.record(t, K, L, C)
    h = spec.step
    streak = 0
    steps = 0
    while True:
        if C < spec.tol:
            trace.status = Status.CONVERGED
            break
        if t >= spec.max_time:
            trace.status, trace.reason = Status.MAX_TIME, f"t reached {t:.6g}"
            break
        if steps >= spec.max_steps:
            trace.status, trace.reason = Status.MAX_TIME, f"step limit {spec.max_steps} reached"
            break
        steps += 1
        try:
            K_new, L_new, C_new, h_used, by_energy = _attempt(spec, surface, f, K, C, h, trace)
        except (GeometryError, AssemblyError, ValueError, ArithmeticError) as e:
            trace.status, trace.reason = Status.DIVERGED, f"geometric error: {e}"
            break
        if K_new is None:
            trace.status, trace.reason = Status.DIVERGED, f"stalled: no acceptable step above {MIN_STEP:g}"
            break
        t += h_used
        K, L, C = K_new, L_new, C_new
        trace.accepted += 1
        trace.energy_accepts += by_energy
        trace.record(t, K, L, C)
        if np.max(np.abs(K)) > DIVERGENCE_BOUND:
            trace.status, trace.reason = Status.DIVERGED, f"|K|_inf exceeded {DIVERGENCE_BOUND:g}"
            break
        if h_used < h:
            h, streak = h_used, 0
        else:
            streak += 1
            if streak >= GROW_AFTER:
                h, streak = h * GROW_FACTOR, 0
    log.debug("%s: %s after %d steps, t=%.4g, C=%.3e", spec.label, trace.status.value,
              trace.accepted, t, C)
    return trace


def _try(surface, f, K, h, target):
    K_new = _rk4(f, K, h)
    if not np.all(np.isfinite(K_new)):
        return None, None, math.inf
    L_new = total_curvature(surface, K_new)
    return K_new, L_new, calabi_energy(L_new, target)


def _attempt(spec, surface, f, K, C, h, trace):
    """Return (K, L, C, h, accepted_by_energy) or Nones when stalled."""
    h0 = h
    while h >= MIN_STEP:
        K_new, L_new, C_new = _try(surface, f, K, h, spec.target)
        if K_new is not None and C_new <= C:
            return K_new, L_new, C_new, h, False
        trace.rejected += 1
        h *= 0.5
    if spec.kind is FlowKind.PCALABI:
        h = h0
        while h >= MIN_STEP:
            K_new, L_new, C_new = _try(surface, f, K, h, spec.target)
            if K_new is not None and energy(surface, K_new, K, spec.target) < 0:
                return K_new, L_new, C_new, h, True
            trace.rejected += 1
            h *= 0.5
    return None, None, None, None, False


# -- Newton ------------------------------------------------------------------

@dataclass
class NewtonResult:
    K: np.ndarray
    converged: bool
    iterations: int
    residual: float  # max-norm of L - L_hat
    reason: str = ""


def newton_solve(surface: TriangulatedSurface, L_hat, K0=None, *, tol: float = 1e-11,
                 max_iter: int = 200, armijo: float = 1e-4, min_alpha: float = 1e-12) -> NewtonResult:
    """Damped Newton iteration on ``L(K) = L_hat`` with backtracking on ``||L - L_hat||^2``.

    Steps are capped at ``NEWTON_MAX_STEP`` in max-norm before the line search.
    """
    L_hat = np.asarray(L_hat, dtype=float)
    K = np.zeros(surface.n_vertices) if K0 is None else np.array(K0, dtype=float)
    r = total_curvature(surface, K) - L_hat
    phi = float(r @ r)
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(r)))
        if res < tol:
            return NewtonResult(K, True, it, res)
        if it == max_iter:
            break
        try:
            d = -np.linalg.solve(jacobian(surface, K).Lam, r)
        except (np.linalg.LinAlgError, AssemblyError):
            return NewtonResult(K, False, it, res, "Jacobian numerically singular")
        # L is bounded, so ||L - L_hat|| has plateaus far out; cap the step
        # so the line search cannot jump onto one
        dmax = float(np.max(np.abs(d)))
        scale = min(1.0, NEWTON_MAX_STEP / dmax) if dmax > 0 else 1.0
        d *= scale
        alpha = 1.0
        while True:
            K_try = K + alpha * d
            if np.max(np.abs(K_try)) <= DIVERGENCE_BOUND:
                r_try = total_curvature(surface, K_try) - L_hat
                phi_try = float(r_try @ r_try)
                # gradient of phi along d is -2*phi*(scale of d)
                if phi_try <= (1.0 - 2.0 * armijo * alpha * scale) * phi:
                    break
            alpha *= 0.5
            if alpha < min_alpha:
                reason = ("Newton step leaves the box |K|_inf <= 50" if np.max(np.abs(K + d)) > DIVERGENCE_BOUND
                          else "line search stalled")
                return NewtonResult(K, False, it, res, reason)
        K, r, phi = K_try, r_try, phi_try
    return NewtonResult(K, False, max_iter, float(np.max(np.abs(r))), f"no convergence in {max_iter} iterations")


# -- rate ---------------------------------------------------------------------

def fit_exponential_rate(trace: FlowTrace, min_samples: int = 20) -> tuple[float, float]:
    """Fit ``ln C = a - rate * t`` on the last half of the samples.

    Returns ``(rate, r_squared)``; a perfectly flat tail has rate 0 and r^2 1.
    """
    t = np.asarray(trace.times, dtype=float)
    C = np.asarray(trace.calabi, dtype=float)
    if len(t) < min_samples:
        raise InsufficientDataError(f"need at least {min_samples} samples, trace has {len(t)}")
    t, C = t[len(t) // 2:], C[len(C) // 2:]
    keep = C > 0
    t, y = t[keep], np.log(C[keep])
    if len(t) < 2:
        raise InsufficientDataError("fewer than two positive Calabi samples in the tail")
    slope, icept = np.polyfit(t, y, 1)
    ss_res = float(np.sum((y - (slope * t + icept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(-slope), r2
