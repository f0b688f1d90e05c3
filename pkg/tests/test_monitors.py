"""Energy, residual, Jensen and growth-inequality monitors.

The gap columns claim a perfect-square identity: energy minus a diagonal
quarter-coefficient form equals sum_i w_i (sqrt(beta) x_i + sqrt(B) z_i)^2/4.
That is checked here by brute-force expansion on random states, independent
of any trajectory.  Residuals must vanish bitwise at t = 0 because the
lifted sources are built from the same floating-point expressions.  The
discrete Jensen inequality needs only convexity plus nonnegative sine
weights, so random states are a complete test.
"""

import math

import numpy as np
import pytest

from jmgtlab.domain import DomainSpec, build_basis
from jmgtlab.galerkin import GalerkinSystem, ModelParams, SpectralState
from jmgtlab.integrator import IntegratorConfig, integrate
from jmgtlab.monitors import (
    CSV_COLUMNS,
    CSV_SCHEMA_VERSION,
    build_report,
    energy_level1,
    energy_level2,
    jensen_gap,
    odi_slack,
    pair_energy,
    residuals,
)
from jmgtlab.nonlinearity import custom, exponential, quadratic, zero
from jmgtlab.reporting import read_csv, write_csv


def _system(n=6, nl=None, tau=1.0, alpha=1.0, beta=1.0, gamma=1.0):
    basis = build_basis(DomainSpec.interval(), n)
    params = ModelParams(tau=tau, alpha=alpha, beta=beta, gamma=gamma)
    return GalerkinSystem(basis, params, nl if nl is not None else zero())


def _random_state(rng, n, t=0.0, integrals=True):
    cols = [rng.standard_normal(n) for _ in range(5 if integrals else 3)]
    if not integrals:
        cols += [np.zeros(n), np.zeros(n)]
    return SpectralState(t=t, a=cols[0], b=cols[1], c=cols[2], va=cols[3], wa=cols[4])


def _random_params(rng):
    tau, beta, gamma = 10.0 ** rng.uniform(-1, 1, size=3)
    return ModelParams(tau=tau, alpha=rng.uniform(0.1, 3.0), beta=beta, gamma=gamma)


# -- perfect-square energy identities ----------------------------------------


def test_level1_gap_is_exact_surplus():
    rng = np.random.default_rng(11)
    lam = np.arange(1.0, 7.0) ** 2
    for _ in range(50):
        p = _random_params(rng)
        st = _random_state(rng, 6)
        F, gap = energy_level1(st, p, lam)
        lam2 = lam * lam
        diagonal = (
            0.5 * p.tau * np.sum(lam * st.c**2)
            + 0.25 * p.beta * np.sum(lam2 * st.b**2)
            + 0.25 * p.B * np.sum(lam2 * st.a**2)
        )
        assert gap >= 0.0
        assert math.isclose(F - diagonal, gap, rel_tol=1e-10, abs_tol=1e-12 * abs(F))


def test_level2_gap_is_exact_surplus():
    rng = np.random.default_rng(12)
    lam = np.arange(1.0, 7.0) ** 2
    for _ in range(50):
        p = _random_params(rng)
        st = _random_state(rng, 6)
        F2, gap = energy_level2(st, p, lam)
        lam2 = lam * lam
        diagonal = (
            0.5 * p.tau * np.sum(lam * st.b**2)
            + 0.25 * p.beta * np.sum(lam2 * st.a**2)
            + 0.25 * p.B * np.sum(lam2 * st.va**2)
        )
        assert gap >= 0.0
        assert math.isclose(F2 - diagonal, gap, rel_tol=1e-10, abs_tol=1e-12 * abs(F2))


def test_pair_gap_is_exact_surplus():
    rng = np.random.default_rng(13)
    lam = np.arange(1.0, 7.0) ** 2
    for _ in range(50):
        p = _random_params(rng)
        sa, sb = _random_state(rng, 6), _random_state(rng, 6)
        F, gap = pair_energy(sa, sb, p, lam)
        dU, dV, dW = sa.b - sb.b, sa.a - sb.a, sa.va - sb.va
        diagonal = (
            0.5 * p.tau * np.sum(dU**2)
            + 0.25 * p.beta * np.sum(lam * dV**2)
            + 0.25 * p.B * np.sum(lam * dW**2)
        )
        assert gap >= 0.0
        assert math.isclose(F - diagonal, gap, rel_tol=1e-10, abs_tol=1e-12 * abs(F))


def test_pair_energy_of_identical_states_is_zero():
    rng = np.random.default_rng(14)
    st = _random_state(rng, 6)
    lam = np.arange(1.0, 7.0) ** 2
    F, gap = pair_energy(st, st, ModelParams(1.0, 1.0, 1.0, 1.0), lam)
    assert F == 0.0 and gap == 0.0


# -- integrated-identity residuals -------------------------------------------


def test_residuals_bitwise_zero_at_t0():
    for nl in (zero(), quadratic(1.5), exponential(0.7)):
        sys6 = _system(nl=nl, tau=1.3, alpha=0.7, beta=2.0, gamma=0.9)
        idx = np.arange(1.0, 7.0)
        st0 = sys6.init_state(0.4 / idx**2, -0.2 / idx**2, 0.1 / idx)
        sources = sys6.lifted_sources(st0)
        r01, r02, r41 = residuals(st0, sys6, sources)
        assert r01 == 0.0 and r02 == 0.0 and r41 == 0.0


def test_residuals_match_direct_assembly():
    rng = np.random.default_rng(15)
    sys6 = _system(nl=quadratic(2.0), tau=2.0, alpha=0.5, beta=1.5, gamma=3.0)
    st0 = sys6.init_state(rng.standard_normal(6) * 0.2, np.zeros(6), np.zeros(6))
    sources = sys6.lifted_sources(st0)
    st = _random_state(rng, 6, t=0.7)
    p, lam = sys6.params, sys6.lam
    v01 = (
        p.tau * st.c
        + p.alpha * st.b
        + p.beta * lam * st.a
        + p.gamma * lam * st.va
        - sys6.project_f1v(st.a, st.b)
        - sources.z1
    )
    v02 = (
        p.tau * st.b
        + p.alpha * st.a
        + p.beta * lam * st.va
        + p.gamma * lam * st.wa
        - sys6.project_f(st.a)
        - st.t * sources.z1
        - sources.z2
    )
    r01, r02, r41 = residuals(st, sys6, sources)
    assert r01 == float(np.linalg.norm(v01))
    assert r02 == float(np.linalg.norm(v02))
    assert r41 == float(v02[0])  # signed, not an absolute value


def test_residuals_stay_small_along_trajectory():
    sys6 = _system(nl=quadratic(1.0))
    idx = np.arange(1.0, 7.0)
    st0 = sys6.init_state(0.3 / idx**2, -0.1 / idx**2, np.zeros(6))
    sources = sys6.lifted_sources(st0)
    out = integrate(sys6, st0, IntegratorConfig(t_end=1.0, rel_tol=1e-10, sample_dt=0.1))
    worst = max(residuals(s.state, sys6, sources)[1] for s in out.samples)
    assert 0.0 < worst < 1e-7


# -- Jensen gap ---------------------------------------------------------------


def test_jensen_gap_nonnegative_for_convex_f():
    rng = np.random.default_rng(16)
    for nl in (quadratic(1.3), exponential(0.7)):
        sys6 = _system(nl=nl)
        for _ in range(200):
            st = _random_state(rng, 6)
            assert jensen_gap(st, sys6) >= -1e-12


def test_jensen_gap_zero_cases():
    sys6 = _system(nl=zero())
    rng = np.random.default_rng(17)
    assert jensen_gap(_random_state(rng, 6), sys6) == 0.0
    # quadratic f with u exactly on mode 1: gap = k(<u^2 e1>/kappa - y^2) > 0
    sysq = _system(nl=quadratic(1.0))
    st = SpectralState(
        t=0.0, a=np.array([2.0, 0, 0, 0, 0, 0.0]), b=np.zeros(6), c=np.zeros(6),
        va=np.zeros(6), wa=np.zeros(6),
    )
    assert jensen_gap(st, sysq) > 0.1


# -- growth inequality --------------------------------------------------------


def test_odi_slack_value_and_regime():
    sysq = _system(nl=quadratic(2.0), tau=1.5)
    kap = sysq.basis.kappa
    K0 = 1.0
    mk = lambda a1, b1: SpectralState(
        t=0.0,
        a=np.array([a1, 0, 0, 0, 0, 0.0]),
        b=np.array([b1, 0, 0, 0, 0, 0.0]),
        c=np.zeros(6), va=np.zeros(6), wa=np.zeros(6),
    )
    # inside the regime: y > K0/kappa, y' > 0
    st = mk(2.0, 1.0)
    slack, in_regime = odi_slack(st, sysq, K0)
    y, yp = 2.0 / kap, 1.0 / kap
    assert in_regime
    assert math.isclose(slack, 1.5 * yp - 0.25 * 2.0 * y * y, rel_tol=1e-14)
    # y below the threshold
    assert not odi_slack(mk(0.5 * K0, 1.0), sysq, K0)[1]
    # y' not positive
    assert not odi_slack(mk(2.0, 0.0), sysq, K0)[1]


# -- report assembly ----------------------------------------------------------


def _small_run(nl=None, t_end=0.5, **kw):
    sys4 = _system(n=4, nl=nl)
    idx = np.arange(1.0, 5.0)
    st0 = sys4.init_state(0.1 / idx**2, np.zeros(4), np.zeros(4))
    sources = sys4.lifted_sources(st0)
    out = integrate(sys4, st0, IntegratorConfig(t_end=t_end, sample_dt=0.05, **kw))
    return sys4, sources, out


def test_build_report_rows_and_summary():
    sys4, sources, out = _small_run(nl=quadratic(1.0))
    rep = build_report(out, sys4, sources)
    assert rep.columns == CSV_COLUMNS
    assert rep.schema_version == CSV_SCHEMA_VERSION
    assert rep.summary["n_samples"] == len(out.samples) == len(rep.rows)
    assert tuple(rep.rows[0]) == CSV_COLUMNS  # key order frozen
    assert rep.rows[0]["t"] == 0.0
    assert rep.rows[0]["r01"] == 0.0 and rep.rows[0]["r02"] == 0.0
    assert rep.summary["status"] == "reached_t_end"
    assert rep.summary["min_F_N_gap"] >= 0.0
    assert rep.summary["min_F2_gap"] >= 0.0
    assert rep.summary["min_jensen_gap"] >= -1e-12
    assert rep.summary["max_r02"] < 1e-8
    # no K0 supplied: growth-inequality columns are inert
    assert all(math.isnan(r["odi_slack"]) for r in rep.rows)
    assert all(r["regime_flag"] == 0.0 for r in rep.rows)
    assert rep.summary["min_odi_slack"] is None
    assert rep.summary["odi_finding"] is False


def test_build_report_jensen_skipped_for_nonconvex():
    cube = custom(
        f=lambda u: u**3,
        f1=lambda u: 3 * u**2,
        f2=lambda u: 6 * u,
        f3=lambda u: 6 * np.ones_like(u),
        name="u^3",
    )
    sys4, sources, out = _small_run(nl=cube, t_end=0.2, backend="python")
    rep = build_report(out, sys4, sources)
    assert all(math.isnan(r["jensen_gap"]) for r in rep.rows)
    assert rep.summary["min_jensen_gap"] is None


def test_build_report_toggles():
    sys4, sources, out = _small_run(nl=quadratic(1.0))
    rep = build_report(
        out, sys4, sources, K0=0.0,
        toggles={"energies": False, "residuals": False, "jensen": False, "odi": False},
    )
    for row in rep.rows:
        for col in ("F_N", "F_N_gap", "F2", "F2_gap", "r01", "r02", "r41",
                    "jensen_gap", "odi_slack"):
            assert math.isnan(row[col])
        assert row["regime_flag"] == 0.0
        assert not math.isnan(row["u_linf"])  # norms always on
    with pytest.raises(ValueError, match="unknown monitor toggles"):
        build_report(out, sys4, sources, toggles={"energy": True})


def test_build_report_odi_regime_rows():
    # strong first-mode push enters the certified growth regime
    sys4 = _system(n=4, nl=quadratic(1.0))
    st0 = sys4.init_state(
        np.array([3.0, 0, 0, 0.0]), np.array([3.0, 0, 0, 0.0]), np.zeros(4)
    )
    sources = sys4.lifted_sources(st0)
    out = integrate(sys4, st0, IntegratorConfig(t_end=2.0, u_max=1e4, sample_dt=0.02))
    rep = build_report(out, sys4, sources, K0=1.0)
    flags = [r["regime_flag"] for r in rep.rows]
    assert 1.0 in flags
    in_rows = [r for r in rep.rows if r["regime_flag"] == 1.0]
    assert all(not math.isnan(r["odi_slack"]) for r in in_rows)
    out_rows = [r for r in rep.rows if r["regime_flag"] == 0.0]
    assert all(math.isnan(r["odi_slack"]) for r in out_rows)
    assert rep.summary["min_odi_slack"] == min(r["odi_slack"] for r in in_rows)
    assert not rep.summary["odi_finding"]


# -- csv round trip -----------------------------------------------------------


def _same_float(x, y):
    return (math.isnan(x) and math.isnan(y)) or x == y


def test_csv_write_read_roundtrip_bitwise(tmp_path):
    sys4, sources, out = _small_run(nl=quadratic(1.0))
    rep = build_report(out, sys4, sources)  # odi columns exercise nan
    path = tmp_path / "run.csv"
    write_csv(str(path), rep)
    columns, rows = read_csv(str(path))
    assert columns == CSV_COLUMNS
    assert len(rows) == len(rep.rows)
    for got, want in zip(rows, rep.rows):
        for col in CSV_COLUMNS:
            assert _same_float(got[col], want[col]), col


def test_csv_header_is_frozen():
    assert ",".join(CSV_COLUMNS) == (
        "t,u_linf,u_l2,ut_h1,u_h2,utt_h1,ut_h2,y,y_prime,F_N,F_N_gap,"
        "F2,F2_gap,r01,r02,r41,jensen_gap,odi_slack,regime_flag"
    )
    assert CSV_SCHEMA_VERSION == 1
