from __future__ import annotations

import math

import numpy as np
import pytest

import hypack.flows as flows
from hypack.assembly import jacobian, min_eigenvalue, total_curvature
from hypack.flows import (
    FlowKind,
    FlowSpec,
    FlowTrace,
    InsufficientDataError,
    Status,
    fit_exponential_rate,
    integrate,
    newton_solve,
    rhs,
)
from hypack.surface import icosahedron, octahedron, tetrahedron

ONES = np.ones(4)
# solution of L(K) = (1,1,1,1) on the tetrahedron: four congruent hypercycles
K_TETRA = -2.836737


@pytest.fixture(scope="module")
def manufactured():
    s = octahedron()
    K_star = np.random.default_rng(3).uniform(-1.5, 1.5, 6)
    return s, K_star, total_curvature(s, K_star)


# -- specs and vector fields ---------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        FlowSpec("pcalabi", ONES, p=1.0)
    with pytest.raises(ValueError):
        FlowSpec("calabi", ONES, tol=0.0)
    with pytest.raises(ValueError):
        FlowSpec("heat", ONES)
    assert FlowSpec("ricci", ONES, s=0.7).s == 0.0
    assert FlowSpec("fractional", ONES, s=0.0).kind is FlowKind.RICCI
    assert FlowSpec("pcalabi", ONES, p=3).label == "pcalabi:3"


@pytest.mark.parametrize("kind, kw", [("calabi", {}), ("ricci", {}), ("fractional", {"s": 0.5}),
                                      ("pcalabi", {"p": 1.5}), ("pcalabi", {"p": 3})])
def test_rhs_vanishes_at_equilibrium(kind, kw, rng):
    s = icosahedron()
    K = rng.uniform(-1, 1, 12)
    spec = FlowSpec(kind, total_curvature(s, K), **kw)
    np.testing.assert_array_equal(rhs(spec, s, K), np.zeros(12))


def test_rhs_reductions(rng):
    s = octahedron()
    L_hat = rng.uniform(1, 4, 6)
    for _ in range(10):
        K = rng.uniform(-2, 2, 6)
        cal = rhs(FlowSpec("calabi", L_hat), s, K)
        np.testing.assert_allclose(rhs(FlowSpec("fractional", L_hat, s=1.0), s, K), cal, atol=1e-10)
        np.testing.assert_allclose(rhs(FlowSpec("pcalabi", L_hat, p=2.0), s, K), cal, atol=1e-10)
        r = total_curvature(s, K) - L_hat
        np.testing.assert_allclose(rhs(FlowSpec("fractional", L_hat, s=0.0), s, K), -r, atol=1e-12)


# -- integration ---------------------------------------------------------------

def test_calabi_tetrahedron_example():
    s = tetrahedron()
    tr = integrate(FlowSpec("calabi", ONES, tol=1e-10), s, np.zeros(4))
    assert tr.converged
    np.testing.assert_allclose(tr.L_final, 1.0, atol=1e-5)
    np.testing.assert_allclose(tr.K_final, K_TETRA, atol=1e-5)
    np.testing.assert_allclose(tr.K_final, newton_solve(s, ONES).K, atol=1e-5)


def test_trace_invariants(manufactured):
    s, _, L_hat = manufactured
    for spec in (FlowSpec("calabi", L_hat), FlowSpec("fractional", L_hat, s=1.5), FlowSpec("pcalabi", L_hat, p=3)):
        tr = integrate(spec, s, np.zeros(6))
        t, K, L, C = tr.arrays()
        assert tr.converged
        assert np.all(np.diff(t) > 0)
        assert np.all(np.diff(C) <= 0)
        np.testing.assert_allclose(L, total_curvature(s, K), atol=1e-14)
        assert tr.energy_accepts == 0


def test_equilibrium_is_fixed(rng):
    s = icosahedron()
    K0 = rng.uniform(-1, 1, 12)
    tr = integrate(FlowSpec("calabi", total_curvature(s, K0)), s, K0)
    assert tr.converged and len(tr.times) == 1
    np.testing.assert_array_equal(tr.K_final, K0)


@pytest.mark.parametrize("kind, kw", [("calabi", {}), ("ricci", {}), ("fractional", {"s": 0.5}),
                                      ("fractional", {"s": 1.5}), ("pcalabi", {"p": 3}), ("pcalabi", {"p": 4})])
def test_flows_recover_manufactured_solution(manufactured, kind, kw):
    s, K_star, L_hat = manufactured
    tr = integrate(FlowSpec(kind, L_hat, tol=1e-16, **kw), s, np.zeros(6))
    assert tr.converged
    np.testing.assert_allclose(tr.K_final, K_star, atol=1e-5)


def test_sub_quadratic_p_flow(manufactured):
    # for p < 2 the field is not Lipschitz where edge differences vanish and the
    # explicit scheme needs ever smaller steps near the limit; check against the
    # accuracy the stopping rule implies, |K - K*| <~ sqrt(tol)/lambda_min
    s, K_star, L_hat = manufactured
    tol = 1e-5
    tr = integrate(FlowSpec("pcalabi", L_hat, p=1.5, tol=tol), s, np.zeros(6))
    assert tr.converged
    assert np.all(np.diff(tr.calabi) <= 0)
    bound = math.sqrt(tol) / min_eigenvalue(jacobian(s, K_star))
    assert np.abs(tr.K_final - K_star).max() < bound


def test_step_size_robustness(manufactured):
    s, _, L_hat = manufactured
    a = integrate(FlowSpec("calabi", L_hat, tol=1e-18, step=0.1), s, np.zeros(6))
    b = integrate(FlowSpec("calabi", L_hat, tol=1e-18, step=0.05), s, np.zeros(6))
    assert a.converged and b.converged
    assert np.abs(a.K_final - b.K_final).max() < 1e-7


def test_initial_condition_independence(manufactured):
    s, K_star, L_hat = manufactured
    rng = np.random.default_rng(11)
    for K0 in rng.uniform(-2, 2, (4, 6)):
        tr = integrate(FlowSpec("ricci", L_hat, tol=1e-16), s, K0)
        assert tr.converged
        np.testing.assert_allclose(tr.K_final, K_star, atol=1e-5)


def test_determinism(manufactured):
    s, _, L_hat = manufactured
    spec = FlowSpec("fractional", L_hat, s=0.5)
    a, b = integrate(spec, s, np.zeros(6)), integrate(spec, s, np.zeros(6))
    assert a.times == b.times and a.calabi == b.calabi
    np.testing.assert_array_equal(np.array(a.K), np.array(b.K))


def test_ricci_alias_is_bitwise_identical(manufactured):
    s, _, L_hat = manufactured
    a = integrate(FlowSpec("ricci", L_hat), s, np.zeros(6))
    b = integrate(FlowSpec("fractional", L_hat, s=0.0), s, np.zeros(6))
    np.testing.assert_array_equal(np.array(a.K), np.array(b.K))


def test_inadmissible_target_does_not_converge():
    s = tetrahedron()
    L_hat = np.full(4, 3 * math.pi)
    outcomes = set()
    for spec in (FlowSpec("calabi", L_hat, max_time=200), FlowSpec("ricci", L_hat, max_time=200),
                 FlowSpec("pcalabi", L_hat, p=3, max_time=200)):
        tr = integrate(spec, s, np.zeros(4))
        assert not tr.converged and tr.reason
        outcomes.add(tr.status)
    assert Status.DIVERGED in outcomes  # the Ricci flow escapes |K| <= 50


def test_step_limit_is_max_time(manufactured):
    s, _, L_hat = manufactured
    tr = integrate(FlowSpec("calabi", L_hat, max_steps=3), s, np.zeros(6))
    assert tr.status is Status.MAX_TIME and "step limit" in tr.reason


def test_bad_state_is_reported():
    tr = integrate(FlowSpec("calabi", ONES), tetrahedron(), [0, 0, 0, math.nan])
    assert tr.status is Status.DIVERGED and tr.reason.startswith("geometric error")


def test_energy_fallback(monkeypatch, manufactured):
    # make every trial step look like a Calabi-energy increase
    s, _, L_hat = manufactured
    real = flows._try
    calls = []

    def worse(surface, f, K, h, target):
        K_new, L_new, C_new = real(surface, f, K, h, target)
        calls.append(h)
        return K_new, L_new, C_new + 1e3 * len(calls)

    monkeypatch.setattr(flows, "_try", worse)
    tr = integrate(FlowSpec("pcalabi", L_hat, p=3, max_steps=3), s, np.zeros(6))
    assert tr.energy_accepts == 3
    tr = integrate(FlowSpec("calabi", L_hat, max_steps=3), s, np.zeros(6))
    assert tr.status is Status.DIVERGED and "stalled" in tr.reason


# -- Newton ----------------------------------------------------------------------

def test_newton_tetrahedron_example():
    s = tetrahedron()
    res = newton_solve(s, total_curvature(s, np.zeros(4)), [1, -1, 0.5, 0])
    assert res.converged and res.residual < 1e-11
    np.testing.assert_allclose(res.K, 0.0, atol=1e-9)


def test_newton_manufactured(manufactured):
    s, K_star, L_hat = manufactured
    res = newton_solve(s, L_hat)
    assert res.converged
    np.testing.assert_allclose(res.K, K_star, atol=1e-8)


@pytest.mark.parametrize("value", [3 * math.pi, 10.0])
def test_newton_inadmissible(value):
    res = newton_solve(tetrahedron(), np.full(4, value))
    assert not res.converged and res.reason


# -- rates -----------------------------------------------------------------------

@pytest.mark.parametrize("kind, s_exp", [("calabi", 1.0), ("ricci", 0.0), ("fractional", 0.5)])
def test_exponential_rate_matches_linearization(kind, s_exp):
    # near the limit C decays like exp(-2 lambda_min**(1+s) t)
    surf = tetrahedron()
    spec = FlowSpec(kind, ONES, s=s_exp, tol=1e-20, max_time=200)
    tr = integrate(spec, surf, np.zeros(4))
    rate, r2 = fit_exponential_rate(tr)
    lam = min_eigenvalue(jacobian(surf, tr.K_final))
    assert r2 > 0.99
    assert rate == pytest.approx(2 * lam ** (1 + s_exp), rel=0.05)


def test_rate_of_flat_trace():
    tr = FlowTrace(FlowSpec("calabi", ONES))
    for t in range(30):
        tr.record(t, np.zeros(4), ONES, 2.0)
    rate, r2 = fit_exponential_rate(tr)
    assert rate == pytest.approx(0.0, abs=1e-12) and r2 == 1.0


def test_rate_needs_samples():
    tr = FlowTrace(FlowSpec("calabi", ONES))
    tr.record(0.0, np.zeros(4), ONES, 1.0)
    with pytest.raises(InsufficientDataError):
        fit_exponential_rate(tr)
