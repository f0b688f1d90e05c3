"""Blow-up certificates and guaranteed-existence budgets.

Certificate side.  For a convex, superlinear f with integrable tail the
first-mode trace y(t) = <u, e1>/kappa obeys tau y' >= f(y)/4 once the data
dominate explicit thresholds.  The chain, all computable from (f, params,
lambda_1, kappa, T0):

* xi1: smallest xi with  int_xi^inf ds/f(s) < T0 / (4 tau)
* xi2: smallest xi past which all three ratio conditions hold for s >= xi:
       |alpha| s/f(s) <= 1/4,  beta lam1 T0 s/f(s) <= 1/4,
       (gamma lam1 T0^2 / 2) s/f(s) <= 1/4
* K0 = kappa * max(xi1, xi2), and data floors K1 (from u0) and K2 (from
  u0, u1) that force the lifted sources z1_1, z2_1 positive:
       tau K1 >= -alpha <u0,e1> + <f(u0),e1>
       tau K2 >= -alpha <u1,e1> - beta lam1 <u0,e1> + <f'(u0)u1,e1>

Data with <u0,e1> > K0, <u1,e1> > K1, <u2,e1> > K2 then blow up no later
than the comparison solution Y' = f(Y)/(4 tau), Y(0) = y(0), whose life span
is 4 tau * int_{y0}^inf ds/f(s) <= T0.  The searched thresholds have closed
forms for f = k u^2 (tail = 1/(k a)):

    xi1* = 4 tau / (k T0),   xi2* = max(4|alpha|, 4 beta lam1 T0,
                                        2 gamma lam1 T0^2) / k.

Existence side.  A uniform budget chain turns a data bound M (strong norms
of (u0, u1, u2) below M) into a guaranteed existence time T(M) = 1/(2 c15),
through intermediate constants c6..c15 built from the model parameters, the
inequality constants c1..c5 and sup_{|s| <= c7} (|f'|+|f''|+|f'''|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import Basis
from .galerkin import GalerkinSystem, ModelParams
from .nonlinearity import Nonlinearity, derivative_sup_bound, tail_integral

__all__ = [
    "BlowUpCertificate",
    "xi1_threshold",
    "xi2_components",
    "compute_K0",
    "compute_K1",
    "compute_K2",
    "make_certified_data",
    "validate_certificate",
    "comparison_solution",
    "ExistenceConstants",
    "ExistenceBudget",
    "guaranteed_existence_time",
]


def _bisect_decreasing(g, seed: float, rel: float = 1e-13, max_expand: int = 2000):
    """Root bracket + bisection for a decreasing g; returns the upper end.

    Finds x with g(x) <= 0 < g at any smaller argument, assuming g decreases
    through zero.  The returned point satisfies g(x) <= 0.
    """
    lo = hi = seed
    if g(seed) > 0.0:
        for _ in range(max_expand):
            hi *= 2.0
            if g(hi) <= 0.0:
                break
            lo = hi
        else:
            raise RuntimeError("threshold bracket expansion failed upward")
    else:
        for _ in range(max_expand):
            lo *= 0.5
            if g(lo) > 0.0:
                break
            hi = lo
        else:
            return hi  # condition holds arbitrarily far down; threshold ~ 0
    for _ in range(200):
        if hi - lo <= rel * hi:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def xi1_threshold(
    nl: Nonlinearity, tau: float, T0: float, method: str = "auto", seed: float = 1.0
) -> float:
    """Smallest xi with tail(xi) < T0/(4 tau), before margin or clamping."""
    if not (T0 > 0 and math.isfinite(T0)):
        raise ValueError("T0 must be positive and finite")
    if method in ("auto", "closed") and nl.kind == "quadratic" and nl.k > 0:
        return 4.0 * tau / (nl.k * T0)
    target = T0 / (4.0 * tau)
    return _bisect_decreasing(lambda x: tail_integral(nl, x, "quad") - target, seed)


def xi2_components(
    nl: Nonlinearity,
    params: ModelParams,
    lam1: float,
    T0: float,
    method: str = "auto",
    seed: float = 1.0,
) -> dict:
    """Raw ratio thresholds {alpha, beta, gamma}, before margin or clamping.

    Each is the smallest xi past which C * s/f(s) <= 1/4 for s >= xi, using
    the eventual monotone decay of s/f(s) (validated by sampling in
    :func:`validate_certificate`).
    """
    if not (T0 > 0 and math.isfinite(T0)):
        raise ValueError("T0 must be positive and finite")
    coeffs = {
        "alpha": abs(params.alpha),
        "beta": params.beta * lam1 * T0,
        "gamma": 0.5 * params.gamma * lam1 * T0**2,
    }
    out = {}
    for name, C in coeffs.items():
        if C == 0.0:
            out[name] = 0.0
            continue
        if method in ("auto", "closed") and nl.kind == "quadratic" and nl.k > 0:
            out[name] = 4.0 * C / nl.k
            continue

        def g(x, C=C):
            fx = float(np.asarray(nl.f(np.array([x])))[0])
            if fx <= 0:
                return math.inf  # condition cannot hold yet
            return C * x / fx - 0.25

        out[name] = _bisect_decreasing(g, seed)
    return out


def compute_K0(kappa: float, xi1: float, xi2: float) -> float:
    return kappa * max(xi1, xi2)


def compute_K1(
    system: GalerkinSystem, u0: np.ndarray, margin: float, floor: float = 1e-9
) -> float:
    """Floor for <u1, e1>: makes z2_1 strictly positive for any a11 > K1."""
    p = system.params
    required = (-p.alpha * u0[0] + system.project_f(u0)[0]) / p.tau
    return max(0.0, required) * (1.0 + margin) + floor


def compute_K2(
    system: GalerkinSystem,
    u0: np.ndarray,
    u1: np.ndarray,
    margin: float,
    floor: float = 1e-9,
) -> float:
    """Floor for <u2, e1>: makes z1_1 strictly positive for any a21 > K2."""
    p = system.params
    lam1 = system.lam[0]
    required = (
        -p.alpha * u1[0] - p.beta * lam1 * u0[0] + system.project_f1v(u0, u1)[0]
    ) / p.tau
    return max(0.0, required) * (1.0 + margin) + floor


@dataclass(frozen=True)
class BlowUpCertificate:
    T0: float
    margin: float
    xi0: float
    method: str
    xi1_raw: float
    xi2_raw: dict
    xi1: float
    xi2: float
    K0: float
    K1: float
    K2: float
    kappa: float
    lambda1: float
    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    comparison_blow_time: float

    @property
    def y_regime(self) -> float:
        """First-mode trace threshold K0/kappa the ODI regime sits above."""
        return self.K0 / self.kappa


def make_certified_data(
    system: GalerkinSystem,
    T0: float,
    margin: float,
    xi0: float = 1.0,
    method: str = "auto",
    floor: float = 1e-9,
) -> BlowUpCertificate:
    """Build first-mode data guaranteed to blow up before T0.

    The chain is ordered: K0 fixes u0, K1 depends on u0 and fixes u1, K2
    depends on (u0, u1) and fixes u2.  ``margin`` must be positive; every
    inequality in the chain is satisfied strictly by that relative amount.
    """
    if not (margin > 0 and math.isfinite(margin)):
        raise ValueError("margin must be strictly positive")
    if not (xi0 > 0 and math.isfinite(xi0)):
        raise ValueError("xi0 must be positive")
    nl = system.nonlin
    hyp = nl.hypotheses(xi0)
    if not (hyp.convex and hyp.superlinear and hyp.integrable_tail):
        raise ValueError(
            f"nonlinearity {nl.kind} ({nl.name}) fails the growth hypotheses "
            f"(convex={hyp.convex}, superlinear={hyp.superlinear}, "
            f"integrable_tail={hyp.integrable_tail})"
        )
    p = system.params
    lam1 = float(system.lam[0])
    kappa = system.basis.kappa

    xi1_raw = xi1_threshold(nl, p.tau, T0, method=method, seed=xi0)
    comps = xi2_components(nl, p, lam1, T0, method=method, seed=xi0)
    xi1 = max(xi1_raw, xi0) * (1.0 + margin)
    xi2 = max(max(comps.values()), xi0) * (1.0 + margin)
    K0 = compute_K0(kappa, xi1, xi2)

    n = system.n
    u0 = np.zeros(n)
    u0[0] = K0 * (1.0 + margin)
    K1 = compute_K1(system, u0, margin, floor)
    u1 = np.zeros(n)
    u1[0] = K1 * (1.0 + margin)
    K2 = compute_K2(system, u0, u1, margin, floor)
    u2 = np.zeros(n)
    u2[0] = K2 * (1.0 + margin)

    y0 = u0[0] / kappa
    t_blow = 4.0 * p.tau * tail_integral(nl, y0, "auto" if method == "auto" else "quad")
    return BlowUpCertificate(
        T0=T0,
        margin=margin,
        xi0=xi0,
        method=method,
        xi1_raw=xi1_raw,
        xi2_raw=comps,
        xi1=xi1,
        xi2=xi2,
        K0=K0,
        K1=K1,
        K2=K2,
        kappa=kappa,
        lambda1=lam1,
        u0=u0,
        u1=u1,
        u2=u2,
        comparison_blow_time=t_blow,
    )


def validate_certificate(cert: BlowUpCertificate, system: GalerkinSystem) -> dict:
    """Recheck every certified inequality; returns named booleans + 'ok'.

    The quantifier order is part of the contract: K1 must reproduce from the
    stored u0 alone and K2 from (u0, u1); a certificate whose floors were
    computed in any other order fails here.
    """
    nl = system.nonlin
    p = system.params
    checks = {}
    hyp = nl.hypotheses(cert.xi0)
    checks["hypotheses"] = hyp.convex and hyp.superlinear and hyp.integrable_tail

    tail_at_xi1 = tail_integral(nl, cert.xi1)
    checks["tail_below_T0_over_4tau"] = tail_at_xi1 < cert.T0 / (4.0 * p.tau)

    xs = np.geomspace(cert.xi2, cert.xi2 * 1e3, 10)
    with np.errstate(over="ignore"):  # f may overflow to inf far out; ratio -> 0
        fx = np.asarray(nl.f(xs), dtype=float)
        ratio = xs / fx
    lam1 = cert.lambda1
    checks["ratio_alpha"] = bool(np.all(abs(p.alpha) * ratio <= 0.25 + 1e-12))
    checks["ratio_beta"] = bool(np.all(p.beta * lam1 * cert.T0 * ratio <= 0.25 + 1e-12))
    checks["ratio_gamma"] = bool(
        np.all(0.5 * p.gamma * lam1 * cert.T0**2 * ratio <= 0.25 + 1e-12)
    )
    checks["ratio_monotone"] = bool(np.all(np.diff(ratio) <= 1e-9 * ratio[:-1]))

    checks["K0_consistent"] = math.isclose(
        cert.K0, cert.kappa * max(cert.xi1, cert.xi2), rel_tol=1e-12
    )
    checks["u0_above_K0"] = cert.u0[0] > cert.K0
    k1_req = compute_K1(system, cert.u0, 0.0, floor=0.0)
    checks["K1_sufficient"] = cert.K1 >= k1_req - 1e-12 * (1.0 + abs(k1_req))
    checks["u1_above_K1"] = cert.u1[0] > cert.K1
    k2_req = compute_K2(system, cert.u0, cert.u1, 0.0, floor=0.0)
    checks["K2_sufficient"] = cert.K2 >= k2_req - 1e-12 * (1.0 + abs(k2_req))
    checks["u2_above_K2"] = cert.u2[0] > cert.K2

    state0 = system.init_state(cert.u0, cert.u1, cert.u2)
    z = system.lifted_sources(state0)
    checks["z1_positive"] = z.z1[0] > 0
    checks["z2_positive"] = z.z2[0] > 0

    checks["ok"] = all(checks.values())
    return checks


def comparison_solution(nl: Nonlinearity, tau: float, y0: float, times) -> tuple:
    """Solve Y' = f(Y)/(4 tau), Y(0) = y0 along ``times``.

    Returns (Y, t_blow) where t_blow = 4 tau * tail(y0) is the life span and
    Y holds +inf at times past it.  Closed hyperbola for the quadratic
    family; otherwise pointwise inversion of the tail integral, which is the
    exact solution formula t(Y) = 4 tau (tail(y0) - tail(Y)).
    """
    times = np.asarray(times, dtype=float)
    t_blow = 4.0 * tau * tail_integral(nl, y0)
    Y = np.full(times.shape, np.inf)
    live = times < t_blow
    if nl.kind == "quadratic":
        Y[live] = y0 / (1.0 - nl.k * y0 * times[live] / (4.0 * tau))
        return Y, t_blow

    tail0 = tail_integral(nl, y0)
    for idx in np.nonzero(live)[0]:
        target = tail0 - times[idx] / (4.0 * tau)
        lo, hi = y0, 2.0 * y0
        for _ in range(400):
            if tail_integral(nl, hi) < target:
                break
            lo = hi
            hi *= 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if tail_integral(nl, mid) > target:
                lo = mid
            else:
                hi = mid
        Y[idx] = 0.5 * (lo + hi)
    return Y, t_blow


# -- guaranteed existence time ------------------------------------------------


@dataclass(frozen=True)
class ExistenceConstants:
    """Inequality constants c1..c5 entering the budget chain.

    Defaults: c1 = c2 = c3 = 1.1 and c4 = c5 = lambda_1^(-1/2) (spectral
    embedding scale).  These are reported, overridable inputs, not outputs.
    """

    c1: float = 1.1
    c2: float = 1.1
    c3: float = 1.1
    c4: Optional[float] = None
    c5: Optional[float] = None

    def resolve(self, lam1: float) -> "ExistenceConstants":
        c4 = self.c4 if self.c4 is not None else lam1**-0.5
        c5 = self.c5 if self.c5 is not None else lam1**-0.5
        return ExistenceConstants(self.c1, self.c2, self.c3, c4, c5)


@dataclass(frozen=True)
class ExistenceBudget:
    M: float
    constants: ExistenceConstants
    c6: float
    c7: float
    c8: float
    c9: float
    c10: float
    c11: float
    c12: float
    c13: float
    c14: float
    c15: float
    T: float


def guaranteed_existence_time(
    M: float,
    params: ModelParams,
    nl: Nonlinearity,
    lam1: float,
    constants: Optional[ExistenceConstants] = None,
) -> ExistenceBudget:
    """Budget chain M -> c6 -> ... -> c15 -> T(M) = 1/(2 c15).

    Monotone: larger data bounds give shorter guaranteed times.  Every link
    is positive even for f = 0 (the chain keeps additive |alpha| + 3 terms).
    """
    if not (M > 0 and math.isfinite(M)):
        raise ValueError("data bound M must be positive and finite")
    cs = (constants or ExistenceConstants()).resolve(lam1)
    p = params
    B = p.B
    c6 = (0.5 * p.tau + 0.5 * p.beta + p.gamma + 0.5 * B) * M * M
    c7 = cs.c1 * math.sqrt(4.0 * (c6 + 1.0) / B)
    c8 = derivative_sup_bound(nl, c7)
    c9 = (c8 + abs(p.alpha) + 3.0) * 2.0 * (c6 + 1.0) / p.tau
    c10 = (p.gamma + 1.0) * 4.0 * (c6 + 1.0) / p.beta
    c11 = B * (c6 + 1.0)
    c12 = cs.c1**2 * cs.c4**2 * c8**2 * (4.0 * (c6 + 1.0) / p.beta) ** 2
    c13 = 0.25 * cs.c2**2 * cs.c3**2 * c8**2 * (2.0 * (c6 + 1.0) / p.tau) * (
        4.0 * (c6 + 1.0) / B
    )
    c14 = 0.25 * cs.c1**4 * cs.c4**2 * c8**2 * (4.0 * (c6 + 1.0) / p.beta) ** 2 * (
        4.0 * (c6 + 1.0) / B
    )
    c15 = c9 + c10 + c11 + c12 + c13 + c14
    return ExistenceBudget(
        M=M,
        constants=cs,
        c6=c6,
        c7=c7,
        c8=c8,
        c9=c9,
        c10=c10,
        c11=c11,
        c12=c12,
        c13=c13,
        c14=c14,
        c15=c15,
        T=1.0 / (2.0 * c15),
    )
