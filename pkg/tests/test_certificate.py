"""Blow-up certificates and guaranteed-existence budgets.

The quadratic family has closed-form thresholds, tail integrals and a
closed-form comparison hyperbola, so every generic code path (bisection on
the tail, ratio-threshold search, pointwise tail inversion) is checked
against those closed forms by routing the same function through the
"custom" kind.  The existence budget has a hand-computed golden value for
f = 0 at M = 1 where the whole chain collapses to integers.
"""

import dataclasses
import math

import numpy as np
import pytest

from jmgtlab.certificate import (
    ExistenceConstants,
    comparison_solution,
    compute_K0,
    compute_K1,
    compute_K2,
    guaranteed_existence_time,
    make_certified_data,
    validate_certificate,
    xi1_threshold,
    xi2_components,
)
from jmgtlab.domain import DomainSpec, build_basis
from jmgtlab.galerkin import GalerkinSystem, ModelParams
from jmgtlab.nonlinearity import custom, exponential, quadratic, zero


def _system(nl, n=4, tau=1.0, alpha=1.0, beta=1.0, gamma=1.0):
    basis = build_basis(DomainSpec.interval(), n)
    return GalerkinSystem(basis, ModelParams(tau, alpha, beta, gamma), nl)


def _custom_quadratic(k):
    # same function as quadratic(k) but routed through the generic code paths
    return custom(
        f=lambda u: k * u * u,
        f1=lambda u: 2.0 * k * u,
        f2=lambda u: 2.0 * k * np.ones_like(u),
        f3=lambda u: np.zeros_like(u),
        name=f"{k}*u^2 (generic)",
    )


# -- thresholds ----------------------------------------------------------------


def test_xi1_closed_form_quadratic():
    assert xi1_threshold(quadratic(2.0), tau=1.5, T0=3.0) == 4.0 * 1.5 / (2.0 * 3.0)


def test_xi1_bisection_matches_closed_form():
    for k, T0, tau in ((1.0, 1.0, 1.0), (0.25, 4.0, 2.0), (8.0, 0.5, 0.3)):
        closed = xi1_threshold(quadratic(k), tau, T0)
        generic = xi1_threshold(_custom_quadratic(k), tau, T0)
        assert math.isclose(generic, closed, rel_tol=1e-8)


def test_xi2_closed_form_quadratic():
    p = ModelParams(tau=1.0, alpha=-0.7, beta=2.0, gamma=3.0)
    comps = xi2_components(quadratic(2.0), p, lam1=1.0, T0=2.0)
    assert comps["alpha"] == 4.0 * 0.7 / 2.0
    assert comps["beta"] == 4.0 * 2.0 * 1.0 * 2.0 / 2.0
    assert comps["gamma"] == 4.0 * 0.5 * 3.0 * 1.0 * 4.0 / 2.0


def test_xi2_bisection_matches_closed_form():
    p = ModelParams(tau=1.0, alpha=1.3, beta=0.4, gamma=2.2)
    for k in (0.5, 1.0, 16.0):
        closed = xi2_components(quadratic(k), p, lam1=1.0, T0=1.5)
        generic = xi2_components(_custom_quadratic(k), p, lam1=1.0, T0=1.5)
        for name in ("alpha", "beta", "gamma"):
            assert math.isclose(generic[name], closed[name], rel_tol=1e-8), name


def test_xi2_zero_coefficient_gives_zero_threshold():
    p = ModelParams(tau=1.0, alpha=0.0, beta=1.0, gamma=1.0)
    comps = xi2_components(quadratic(1.0), p, lam1=1.0, T0=1.0)
    assert comps["alpha"] == 0.0


def test_thresholds_reject_bad_T0():
    with pytest.raises(ValueError):
        xi1_threshold(quadratic(1.0), 1.0, 0.0)
    with pytest.raises(ValueError):
        xi2_components(quadratic(1.0), ModelParams(1, 1, 1, 1), 1.0, math.inf)


# -- certificate construction and validation -----------------------------------


def test_certificate_chain_quadratic():
    sysq = _system(quadratic(1.0))
    cert = make_certified_data(sysq, T0=1.0, margin=0.01)
    assert cert.xi1_raw == 4.0
    assert max(cert.xi2_raw.values()) == 4.0  # alpha and beta branches tie
    assert cert.xi1 == 4.0 * 1.01
    assert cert.xi2 == 4.0 * 1.01
    assert cert.K0 == compute_K0(cert.kappa, cert.xi1, cert.xi2)
    assert cert.u0[0] == cert.K0 * 1.01 and np.all(cert.u0[1:] == 0.0)
    assert cert.K1 == compute_K1(sysq, cert.u0, 0.01)
    assert cert.u1[0] == cert.K1 * 1.01
    assert cert.K2 == compute_K2(sysq, cert.u0, cert.u1, 0.01)
    assert cert.u2[0] == cert.K2 * 1.01
    assert 0.0 < cert.comparison_blow_time <= cert.T0
    assert cert.y_regime == cert.K0 / cert.kappa
    checks = validate_certificate(cert, sysq)
    assert checks["ok"], checks


def test_certificate_exponential_generic_path():
    syse = _system(exponential(1.0))
    cert = make_certified_data(syse, T0=1.0, margin=0.05)
    assert cert.comparison_blow_time <= cert.T0
    checks = validate_certificate(cert, syse)
    assert checks["ok"], checks


def test_validate_rejects_tampered_floors():
    sysq = _system(quadratic(1.0))
    cert = make_certified_data(sysq, T0=1.0, margin=0.01)
    # data no longer above its floor
    low_u1 = cert.u1.copy()
    low_u1[0] = 0.5 * cert.K1
    bad = dataclasses.replace(cert, u1=low_u1)
    checks = validate_certificate(bad, sysq)
    assert not checks["u1_above_K1"] and not checks["ok"]
    # floor recomputed from the wrong data: K2 was built for (u0, u1), so a
    # doubled u0 must invalidate it (quantifier order is part of the contract)
    big_u0 = cert.u0 * 2.0
    bad2 = dataclasses.replace(cert, u0=big_u0, u1=cert.u1)
    checks2 = validate_certificate(bad2, sysq)
    assert not checks2["K2_sufficient"]
    assert not checks2["ok"]


def test_certificate_refuses_bad_hypotheses():
    with pytest.raises(ValueError, match="zero"):
        make_certified_data(_system(zero()), T0=1.0, margin=0.01)
    cube = custom(
        f=lambda u: u**3,
        f1=lambda u: 3 * u**2,
        f2=lambda u: 6 * u,
        f3=lambda u: 6 * np.ones_like(u),
        name="u^3",
    )
    with pytest.raises(ValueError, match="convex=False"):
        make_certified_data(_system(cube), T0=1.0, margin=0.01)


def test_certificate_rejects_bad_margin():
    sysq = _system(quadratic(1.0))
    for margin in (0.0, -0.5, math.inf):
        with pytest.raises(ValueError):
            make_certified_data(sysq, T0=1.0, margin=margin)
    with pytest.raises(ValueError):
        make_certified_data(sysq, T0=1.0, margin=0.01, xi0=0.0)


# -- comparison solution --------------------------------------------------------


def test_comparison_closed_hyperbola():
    k, tau, y0 = 1.0, 1.0, 5.0
    t_star = 4.0 * tau / (k * y0)
    times = np.linspace(0.0, 1.5 * t_star, 13)
    Y, t_blow = comparison_solution(quadratic(k), tau, y0, times)
    assert math.isclose(t_blow, t_star, rel_tol=1e-12)
    live = times < t_blow
    want = y0 / (1.0 - k * y0 * times[live] / (4.0 * tau))
    assert np.allclose(Y[live], want, rtol=1e-12)
    assert np.all(np.isinf(Y[~live]))
    assert Y[0] == y0


def test_comparison_generic_matches_closed():
    k, tau, y0 = 1.3, 0.8, 4.0
    t_star = 4.0 * tau / (k * y0)
    times = np.linspace(0.0, 0.95 * t_star, 9)
    Y_closed, tb_closed = comparison_solution(quadratic(k), tau, y0, times)
    Y_gen, tb_gen = comparison_solution(_custom_quadratic(k), tau, y0, times)
    assert math.isclose(tb_gen, tb_closed, rel_tol=1e-8)
    assert np.allclose(Y_gen, Y_closed, rtol=1e-6)


def test_comparison_is_monotone_increasing():
    times = np.linspace(0.0, 0.9, 10)
    Y, _ = comparison_solution(exponential(1.0), 1.0, 1.0, times)
    assert np.all(np.diff(Y[np.isfinite(Y)]) > 0)


# -- existence budget ------------------------------------------------------------


def test_budget_golden_value_zero_nonlinearity():
    # tau=alpha=beta=gamma=1 gives B=4; with M=1, c4=c5=1 the chain is exact:
    # c6=4, c8=0, c9=(0+1+3)*2*5=40, c10=2*4*5=40, c11=4*5=20, c15=100, T=1/200
    budget = guaranteed_existence_time(
        1.0, ModelParams(1.0, 1.0, 1.0, 1.0), zero(), lam1=1.0,
        constants=ExistenceConstants(c4=1.0, c5=1.0),
    )
    assert budget.c6 == 4.0
    assert budget.c8 == 0.0
    assert budget.c9 == 40.0
    assert budget.c10 == 40.0
    assert budget.c11 == 20.0
    assert budget.c12 == 0.0 and budget.c13 == 0.0 and budget.c14 == 0.0
    assert budget.c15 == 100.0
    assert budget.T == 0.005


def test_budget_decreasing_in_data_bound():
    p = ModelParams(1.0, 1.0, 1.0, 1.0)
    for nl in (zero(), quadratic(1.0), exponential(0.5)):
        Ts = [guaranteed_existence_time(M, p, nl, 1.0).T for M in (0.1, 1.0, 10.0)]
        assert all(math.isfinite(T) and T > 0 for T in Ts)
        assert Ts[0] > Ts[1] > Ts[2]


def test_budget_nonlinearity_shortens_time():
    p = ModelParams(1.0, 1.0, 1.0, 1.0)
    for M in (0.1, 1.0, 10.0):
        T_zero = guaranteed_existence_time(M, p, zero(), 1.0).T
        T_quad = guaranteed_existence_time(M, p, quadratic(1.0), 1.0).T
        assert T_quad < T_zero


def test_budget_default_constants_use_spectral_scale():
    budget = guaranteed_existence_time(
        1.0, ModelParams(1.0, 1.0, 1.0, 1.0), quadratic(1.0), lam1=4.0
    )
    assert budget.constants.c4 == 0.5 and budget.constants.c5 == 0.5
    assert budget.constants.c1 == 1.1


def test_budget_rejects_bad_M():
    for M in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            guaranteed_existence_time(M, ModelParams(1, 1, 1, 1), zero(), 1.0)
