"""Nonlinearity families: derivative stacks, growth hypotheses, tails."""

import math

import numpy as np
import pytest

from jmgtlab import custom, derivative_sup_bound, exponential, quadratic, tail_integral, zero


def _fd_check(nl, rng, order_pairs, h=1e-6, tol=5e-5):
    # centered differences tie each derivative to the one below it
    for lo, hi in order_pairs:
        u = rng.uniform(-2.0, 2.0, size=16)
        num = (hi(u + h) - hi(u - h)) / (2 * h)
        assert np.allclose(num, lo(u), rtol=tol, atol=tol)


def test_quadratic_derivative_stack():
    rng = np.random.default_rng(0)
    nl = quadratic(1.5)
    _fd_check(nl, rng, [(nl.f1, nl.f), (nl.f2, nl.f1), (nl.f3, nl.f2)])
    u = np.array([0.0, 2.0, -3.0])
    assert np.allclose(nl.f(u), 1.5 * u**2)


def test_exponential_derivative_stack():
    rng = np.random.default_rng(1)
    nl = exponential(0.7)
    _fd_check(nl, rng, [(nl.f1, nl.f), (nl.f2, nl.f1), (nl.f3, nl.f2)])
    assert nl.f(np.array([0.0]))[0] == 0.0
    assert nl.f1(np.array([0.0]))[0] == 0.0


def test_zero_kind():
    nl = zero()
    u = np.linspace(-5, 5, 7)
    for g in (nl.f, nl.f1, nl.f2, nl.f3):
        assert np.all(g(u) == 0.0)
    hyp = nl.hypotheses()
    assert hyp.convex and not hyp.superlinear and not hyp.integrable_tail


def test_coefficient_guards():
    with pytest.raises(ValueError):
        quadratic(0.0)
    with pytest.raises(ValueError):
        exponential(0.0)


def test_hypotheses_analytic_families():
    for nl in (quadratic(2.0), exponential(0.3)):
        hyp = nl.hypotheses()
        assert hyp.convex and hyp.superlinear and hyp.integrable_tail and hyp.analytic
    # negative coefficients break convexity and growth
    hyp = quadratic(-1.0).hypotheses()
    assert not (hyp.convex and hyp.superlinear)


def test_hypotheses_sampled_custom():
    cubic = custom(
        f=lambda u: np.asarray(u, float) ** 3,
        f1=lambda u: 3.0 * np.asarray(u, float) ** 2,
        f2=lambda u: 6.0 * np.asarray(u, float),
        f3=lambda u: np.full_like(np.asarray(u, float), 6.0),
        name="u^3",
    )
    hyp = cubic.hypotheses(xi0=1.0)
    # convexity fails on the negative axis, growth holds on the positive one
    assert not hyp.convex
    assert hyp.superlinear and hyp.integrable_tail and not hyp.analytic


def test_tail_integral_quadratic_closed_form():
    nl = quadratic(2.0)
    for a in (0.5, 1.0, 3.0, 10.0):
        assert tail_integral(nl, a, "closed") == pytest.approx(1.0 / (2.0 * a), rel=1e-15)
        assert tail_integral(nl, a, "quad") == pytest.approx(1.0 / (2.0 * a), rel=1e-10)


def test_tail_integral_exponential_vs_riemann():
    # brute midpoint oracle on [a, a + 60]; the integrand is ~e^{-s} beyond
    nl = exponential(1.0)
    a = 1.0
    s = np.linspace(a, a + 60.0, 2_000_001)
    mid = 0.5 * (s[:-1] + s[1:])
    brute = float(np.sum((s[1] - s[0]) / (np.exp(mid) - 1.0 - mid)))
    assert tail_integral(nl, a) == pytest.approx(brute, rel=1e-6)


def test_tail_integral_decreasing_in_start():
    nl = exponential(0.5)
    vals = [tail_integral(nl, a) for a in (1.0, 2.0, 4.0, 8.0)]
    assert all(x > y > 0 for x, y in zip(vals, vals[1:]))


def test_tail_integral_rejects_nonpositive_start():
    with pytest.raises(ValueError):
        tail_integral(quadratic(1.0), 0.0)
    with pytest.raises(ValueError):
        tail_integral(quadratic(1.0), -1.0)


def test_derivative_sup_bound_dominates_samples():
    rng = np.random.default_rng(5)
    for nl in (zero(), quadratic(1.3), exponential(0.4)):
        for radius in (0.5, 2.0, 5.0):
            bound = derivative_sup_bound(nl, radius)
            u = rng.uniform(-radius, radius, size=200)
            seen = np.abs(nl.f1(u)) + np.abs(nl.f2(u)) + np.abs(nl.f3(u))
            assert bound >= seen.max() - 1e-12
    assert derivative_sup_bound(zero(), 3.0) == 0.0
