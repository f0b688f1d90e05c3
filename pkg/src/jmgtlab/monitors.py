"""Energy functionals, integrated-identity residuals and growth diagnostics.

Everything here is resolvent-free: each functional is a closed expression in
the mode coefficients (plus the lifted sources z1, z2 frozen at t = 0), so a
sampled trajectory can be audited without re-solving anything.

Level-1 energy (strong):   F  = tau/2 |grad u_tt|^2 + beta/2 |Lap u_t|^2
                                + gamma <Lap u, Lap u_t> + B/2 |Lap u|^2
Level-2 energy (integrated): same structure one derivative down, with
                                v = int_0^t u.
Both dominate a quarter-coefficient diagonal form; the surplus ("gap") is a
perfect square sum_i lam_i^2 (sqrt(beta) x_i + sqrt(B) y_i)^2 / 4 with
B = 4 gamma^2 / beta, hence nonnegative for every state, not just along
trajectories.

The residual monitors check the once- and twice-integrated equations

    r01_i: tau c_i + alpha b_i + beta lam_i a_i + gamma lam_i va_i
           - <f'(u)u_t, e_i> - z1_i
    r02_i: tau b_i + alpha a_i + beta lam_i va_i + gamma lam_i wa_i
           - <f(u), e_i> - t z1_i - z2_i

which vanish identically at t = 0 by construction of z1, z2 and stay at the
level of the accumulated integration error afterwards.  r41 is the first
component of r02: the scalar identity driving the blow-up argument.

The Jensen gap (1/kappa)<f(u), e1> - f(y) with y = a_1/kappa is nonnegative
for convex f because e1/kappa is a probability weight; the ODI slack
tau y' - f(y)/4 is the certified differential inequality, meaningful only in
the regime y > K0/kappa, y' > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .galerkin import GalerkinSystem, LiftedSources, SpectralState

__all__ = [
    "CSV_COLUMNS",
    "CSV_SCHEMA_VERSION",
    "energy_level1",
    "energy_level2",
    "pair_energy",
    "residuals",
    "jensen_gap",
    "odi_slack",
    "MonitorReport",
    "build_report",
]

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "t",
    "u_linf",
    "u_l2",
    "ut_h1",
    "u_h2",
    "utt_h1",
    "ut_h2",
    "y",
    "y_prime",
    "F_N",
    "F_N_gap",
    "F2",
    "F2_gap",
    "r01",
    "r02",
    "r41",
    "jensen_gap",
    "odi_slack",
    "regime_flag",
)


def _square_gap(lam_pow, beta, B, x, z):
    # beta/4 x^2 + gamma x z + B/4 z^2 collapses to a perfect square
    return float(np.sum(lam_pow * (np.sqrt(beta) * x + np.sqrt(B) * z) ** 2) / 4.0)


def energy_level1(state: SpectralState, params, lam) -> tuple:
    """(F, gap): strong energy and its surplus over the diagonal bound."""
    lam2 = lam * lam
    B = params.B
    F = (
        0.5 * params.tau * float(np.sum(lam * state.c**2))
        + 0.5 * params.beta * float(np.sum(lam2 * state.b**2))
        + params.gamma * float(np.sum(lam2 * state.a * state.b))
        + 0.5 * B * float(np.sum(lam2 * state.a**2))
    )
    return F, _square_gap(lam2, params.beta, B, state.b, state.a)


def energy_level2(state: SpectralState, params, lam) -> tuple:
    """(F2, gap): integrated energy, with v = running integral of u."""
    lam2 = lam * lam
    B = params.B
    F2 = (
        0.5 * params.tau * float(np.sum(lam * state.b**2))
        + 0.5 * params.beta * float(np.sum(lam2 * state.a**2))
        + params.gamma * float(np.sum(lam2 * state.a * state.va))
        + 0.5 * B * float(np.sum(lam2 * state.va**2))
    )
    return F2, _square_gap(lam2, params.beta, B, state.a, state.va)


def pair_energy(state_a: SpectralState, state_b: SpectralState, params, lam) -> tuple:
    """(F, gap) for the difference of two trajectories at equal times.

    U = difference of u_t (L2), V = difference of u (H1),
    W = difference of the running integral (H1).
    """
    dU = state_a.b - state_b.b
    dV = state_a.a - state_b.a
    dW = state_a.va - state_b.va
    B = params.B
    F = (
        0.5 * params.tau * float(np.sum(dU**2))
        + 0.5 * params.beta * float(np.sum(lam * dV**2))
        + params.gamma * float(np.sum(lam * dV * dW))
        + 0.5 * B * float(np.sum(lam * dW**2))
    )
    return F, _square_gap(lam, params.beta, B, dV, dW)


def residuals(state: SpectralState, system: GalerkinSystem, sources: LiftedSources) -> tuple:
    """(r01, r02, r41): norms of the integrated-identity defects.

    r01, r02 are l2 norms over the modes; r41 is the signed first-mode
    component of the twice-integrated identity.
    """
    p = system.params
    lam = system.lam
    r01_vec = (
        p.tau * state.c
        + p.alpha * state.b
        + p.beta * lam * state.a
        + p.gamma * lam * state.va
        - system.project_f1v(state.a, state.b)
        - sources.z1
    )
    r02_vec = (
        p.tau * state.b
        + p.alpha * state.a
        + p.beta * lam * state.va
        + p.gamma * lam * state.wa
        - system.project_f(state.a)
        - state.t * sources.z1
        - sources.z2
    )
    return (
        float(np.linalg.norm(r01_vec)),
        float(np.linalg.norm(r02_vec)),
        float(r02_vec[0]),
    )


def jensen_gap(state: SpectralState, system: GalerkinSystem) -> float:
    """(1/kappa) <f(u), e1> - f(a1/kappa); nonnegative for convex f."""
    kap = system.basis.kappa
    mean_f = system.project_f(state.a)[0] / kap
    y = state.a[0] / kap
    fy = float(np.asarray(system.nonlin.f(np.array([y])))[0])
    return float(mean_f - fy)


def odi_slack(state: SpectralState, system: GalerkinSystem, K0: float) -> tuple:
    """(slack, in_regime): tau y' - f(y)/4 where the certificate applies."""
    kap = system.basis.kappa
    y = state.a[0] / kap
    yp = state.b[0] / kap
    in_regime = y > K0 / kap and yp > 0
    fy = float(np.asarray(system.nonlin.f(np.array([y])))[0])
    return float(system.params.tau * yp - 0.25 * fy), bool(in_regime)


@dataclass
class MonitorReport:
    columns: tuple
    schema_version: int
    rows: list
    summary: dict


DEFAULT_TOGGLES = {"energies": True, "residuals": True, "jensen": True, "odi": True}


def build_report(
    outcome,
    system: GalerkinSystem,
    sources: LiftedSources,
    K0: Optional[float] = None,
    xi0: float = 1.0,
    toggles: Optional[dict] = None,
) -> MonitorReport:
    """Tabulate every monitored functional on the sampled trajectory.

    ``toggles`` switches functional groups off (their columns become nan);
    unknown toggle keys are rejected so config typos cannot silently
    disable a monitor.
    """
    tg = dict(DEFAULT_TOGGLES)
    if toggles:
        unknown = set(toggles) - set(tg)
        if unknown:
            raise ValueError(f"unknown monitor toggles: {sorted(unknown)}")
        tg.update(toggles)
    p = system.params
    lam = system.lam
    hyp = system.nonlin.hypotheses(xi0)
    rows = []
    odi_finding = False
    for sample in outcome.samples:
        st = sample.state
        if tg["energies"]:
            F1, g1 = energy_level1(st, p, lam)
            F2, g2 = energy_level2(st, p, lam)
        else:
            F1 = g1 = F2 = g2 = math.nan
        if tg["residuals"]:
            r01, r02, r41 = residuals(st, system, sources)
        else:
            r01 = r02 = r41 = math.nan
        jg = jensen_gap(st, system) if (tg["jensen"] and hyp.convex) else math.nan
        if tg["odi"] and K0 is not None:
            slack, in_regime = odi_slack(st, system, K0)
        else:
            slack, in_regime = math.nan, False
        row = dict(sample.norms)
        row["t"] = st.t
        row.update(
            F_N=F1,
            F_N_gap=g1,
            F2=F2,
            F2_gap=g2,
            r01=r01,
            r02=r02,
            r41=r41,
            jensen_gap=jg,
            odi_slack=slack if in_regime else math.nan,
            regime_flag=1.0 if in_regime else 0.0,
        )
        if in_regime:
            fy = float(np.asarray(system.nonlin.f(np.array([row["y"]])))[0])
            if slack < -1e-6 * (1.0 + abs(fy)):
                odi_finding = True
        rows.append({k: row[k] for k in CSV_COLUMNS})

    def _finite(vals):
        return [v for v in vals if not math.isnan(v)]

    jvals = _finite([r["jensen_gap"] for r in rows])
    ovals = _finite([r["odi_slack"] for r in rows])
    summary = {
        "status": outcome.status.value,
        "t_final": outcome.t_final,
        "blow_up": list(outcome.blow_up) if outcome.blow_up else None,
        "linear_regime": p.regime(),
        "min_F_N_gap": min((r["F_N_gap"] for r in rows), default=math.nan),
        "min_F2_gap": min((r["F2_gap"] for r in rows), default=math.nan),
        "max_r01": max((abs(r["r01"]) for r in rows), default=math.nan),
        "max_r02": max((abs(r["r02"]) for r in rows), default=math.nan),
        "max_abs_r41": max((abs(r["r41"]) for r in rows), default=math.nan),
        "min_jensen_gap": min(jvals) if jvals else None,
        "min_odi_slack": min(ovals) if ovals else None,
        "odi_finding": odi_finding,
        "n_samples": len(rows),
    }
    return MonitorReport(CSV_COLUMNS, CSV_SCHEMA_VERSION, rows, summary)
