"""Adaptive time integration with finite-time blow-up detection.

The driver wraps a fused Dormand-Prince 5(4) step (compiled or numpy, see
:mod:`jmgtlab.backend`) with a PI step-size controller, cubic Hermite dense
output for sampling, and a sup-norm watchdog: once the grid L-infinity norm
of u crosses ``u_max`` the crossing is bracketed by bisection on the dense
output inside the offending step.  Outcomes are explicit statuses, never
exceptions: reaching t_end, a detected blow-up bracket, a step-size
underflow, or non-finite arithmetic that survived retries at the minimum
step.

Runs are deterministic: the same system, data and config replay the same
accepted-step sequence and samples bit for bit on a given backend.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backend import make_stepper
from .galerkin import GalerkinSystem, ModelParams, SpectralState

__all__ = [
    "Status",
    "IntegratorConfig",
    "Sample",
    "RunOutcome",
    "integrate",
    "step",
    "linear_modal_solution",
    "hermite_eval",
]

# PI controller constants for a 5th-order propagating pair (dopri5 lineage:
# integral exponent 1/5 weakened by 0.75*beta, proportional memory beta)
_SAFETY = 0.9
_PI_BETA = 0.04
_K_ERR = -(1.0 / 5.0 - 0.75 * _PI_BETA)
_K_PREV = _PI_BETA
_FAC_MIN = 0.2
_FAC_MAX = 5.0


class Status(enum.Enum):
    REACHED_T_END = "reached_t_end"
    BLOW_UP_DETECTED = "blow_up_detected"
    STEP_UNDERFLOW = "step_underflow"
    NON_FINITE = "non_finite"


@dataclass(frozen=True)
class IntegratorConfig:
    t_end: float
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    dt_init: Optional[float] = None
    dt_min: float = 1e-12
    dt_max: Optional[float] = None
    u_max: float = 1e6
    sample_dt: float = 0.01
    max_steps: int = 10_000_000
    backend: str = "auto"
    fixed_dt: Optional[float] = None  # accept every step at this size (testing)

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive and finite")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dt_min <= 0:
            raise ValueError("dt_min must be positive")
        if self.dt_max is not None and self.dt_max < self.dt_min:
            raise ValueError("dt_max must be >= dt_min")
        if self.u_max <= 0:
            raise ValueError("u_max must be positive")
        if self.sample_dt <= 0:
            raise ValueError("sample_dt must be positive")
        if self.fixed_dt is not None and self.fixed_dt <= 0:
            raise ValueError("fixed_dt must be positive")


@dataclass(frozen=True)
class Sample:
    state: SpectralState
    norms: dict


@dataclass
class RunOutcome:
    status: Status
    t_final: float
    samples: list
    blow_up: Optional[tuple] = None  # (t_lo, t_hi) bracketing the crossing
    stats: dict = field(default_factory=dict)


def hermite_eval(y0, y1, f0, f1, dt, theta):
    """Cubic Hermite interpolant on one step, theta in [0, 1]."""
    h00 = (1.0 + 2.0 * theta) * (1.0 - theta) ** 2
    h10 = theta * (1.0 - theta) ** 2
    h01 = theta**2 * (3.0 - 2.0 * theta)
    h11 = theta**2 * (theta - 1.0)
    return h00 * y0 + h01 * y1 + dt * (h10 * f0 + h11 * f1)


def _initial_dt(y0, k1, cfg: IntegratorConfig, t_span: float) -> float:
    # conservative deterministic variant of the classic starting-step rule
    with np.errstate(over="ignore", invalid="ignore"):
        scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
        d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
        d1 = float(np.sqrt(np.mean((k1 / scale) ** 2)))
    if not (math.isfinite(d0) and math.isfinite(d1)):
        return cfg.dt_min
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6 * t_span
    else:
        h = 0.01 * d0 / d1
    return max(cfg.dt_min, min(h, t_span / 10.0, cfg.sample_dt))


def integrate(system: GalerkinSystem, state0: SpectralState, cfg: IntegratorConfig) -> RunOutcome:
    """March the Galerkin system from state0 until t_end or an exit event."""
    stepper, backend_name = make_stepper(system, cfg.backend)
    t0 = float(state0.t)
    t_end = float(cfg.t_end)
    if t_end <= t0:
        raise ValueError("t_end must exceed the initial time")

    y = state0.pack().astype(float, copy=True)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state contains non-finite entries")

    samples: list[Sample] = []
    stats = {"n_accept": 0, "n_reject": 0, "n_rhs": 1, "backend": backend_name}

    def emit(t, yvec):
        st = SpectralState.unpack(t, yvec)
        samples.append(Sample(state=st, norms=system.norms(st)))

    def finish(status, t_final, blow_up=None):
        stats["dt_last"] = dt_last
        stats["n_samples"] = len(samples)
        return RunOutcome(status, t_final, samples, blow_up=blow_up, stats=stats)

    emit(t0, y)
    if samples[0].norms["u_linf"] >= cfg.u_max:
        dt_last = 0.0
        return finish(Status.BLOW_UP_DETECTED, t0, blow_up=(t0, t0))

    k1 = stepper.rhs(y)
    if not np.all(np.isfinite(k1)):
        dt_last = 0.0
        return finish(Status.NON_FINITE, t0)

    dt_max = cfg.dt_max if cfg.dt_max is not None else t_end - t0
    h = cfg.fixed_dt or cfg.dt_init or _initial_dt(y, k1, cfg, t_end - t0)
    h = min(max(h, cfg.dt_min), dt_max)

    t = t0
    err_prev = 1.0
    dt_last = 0.0
    rejected_last = False
    next_sample = math.floor(t0 / cfg.sample_dt + 1e-9) + 1
    attempts = 0

    def sample_times_in(t_a, t_b):
        # multiples of sample_dt in (t_a, t_b], robust to accumulation noise
        out = []
        k = next_sample
        while k * cfg.sample_dt <= t_b + 1e-12 * max(1.0, abs(t_b)):
            ts = k * cfg.sample_dt
            if ts > t_a:
                out.append((k, min(ts, t_b)))
            k += 1
        return out

    while True:
        if t >= t_end - 1e-14 * max(1.0, t_end):
            if not samples or samples[-1].state.t < t_end * (1.0 - 1e-15):
                emit(t_end, y)
            return finish(Status.REACHED_T_END, t_end)
        attempts += 1
        if attempts > cfg.max_steps:
            raise RuntimeError(f"exceeded max_steps={cfg.max_steps}")

        if cfg.fixed_dt is not None:
            dt = min(cfg.fixed_dt, t_end - t)
        else:
            dt = min(max(h, cfg.dt_min), dt_max, t_end - t)
            if t + 1.05 * dt >= t_end:  # avoid a sliver step at the end
                dt = t_end - t

        y5, err_norm, k_new, linf_new = stepper.step(y, k1, dt, cfg.abs_tol, cfg.rel_tol)
        stats["n_rhs"] += 6

        finite = math.isfinite(err_norm) and bool(np.all(np.isfinite(y5)))
        if not finite:
            if cfg.fixed_dt is not None or dt <= cfg.dt_min * 1.000001:
                return finish(Status.NON_FINITE, t)
            stats["n_reject"] += 1
            rejected_last = True
            h = max(0.1 * dt, cfg.dt_min)
            continue

        if cfg.fixed_dt is None and err_norm > 1.0:
            if dt <= cfg.dt_min * 1.000001:
                return finish(Status.STEP_UNDERFLOW, t)
            stats["n_reject"] += 1
            rejected_last = True
            h = max(dt * max(_FAC_MIN, _SAFETY * err_norm**(-0.2)), cfg.dt_min)
            continue

        # accepted
        t_new = t + dt
        dt_last = dt
        stats["n_accept"] += 1

        def linf_at(theta):
            ys = hermite_eval(y, y5, k1, k_new, dt, theta)
            return float(np.abs(system.basis.synthesize(ys[0 : system.n])).max()), ys

        crossing_theta = None
        if linf_new >= cfg.u_max:
            crossing_theta = 1.0
        pending = sample_times_in(t, t_new)
        emitted = []
        theta_ok = 0.0
        for k_idx, ts in pending:
            theta_s = (ts - t) / dt
            val, ys = linf_at(theta_s)
            if val >= cfg.u_max and crossing_theta is None:
                crossing_theta = theta_s  # interior crossing caught at a sample
                break
            if val >= cfg.u_max:
                break
            emitted.append((k_idx, ts, ys))
            theta_ok = theta_s

        if crossing_theta is not None:
            # refine until the bracket endpoints are adjacent representable
            # times; both ends keep a verified sup-norm value
            lo, hi = theta_ok, crossing_theta
            val_lo, _ = linf_at(lo)
            val_hi, _ = linf_at(hi)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if not (t + lo * dt < t + mid * dt < t + hi * dt):
                    break
                val, _ = linf_at(mid)
                if val >= cfg.u_max:
                    hi, val_hi = mid, val
                else:
                    lo, val_lo = mid, val
            for k_idx, ts, ys in emitted:
                if ts <= t + lo * dt:
                    emit(ts, ys)
                    next_sample = k_idx + 1
            t_lo, t_hi = t + lo * dt, t + hi * dt
            _, y_lo = linf_at(lo)
            if not samples or samples[-1].state.t < t_lo:
                emit(t_lo, y_lo)
            stats["blowup_linf"] = (val_lo, val_hi)
            return finish(Status.BLOW_UP_DETECTED, t_lo, blow_up=(t_lo, t_hi))

        for k_idx, ts, ys in emitted:
            emit(ts, ys)
            next_sample = k_idx + 1

        t, y, k1 = t_new, y5, k_new
        if cfg.fixed_dt is None:
            e = max(err_norm, 1e-10)
            fac = _SAFETY * e**_K_ERR * err_prev**_K_PREV
            if rejected_last:  # no growth right after a rejection
                fac = min(fac, 1.0)
            rejected_last = False
            h = dt * min(_FAC_MAX, max(_FAC_MIN, fac))
            err_prev = e


def step(system: GalerkinSystem, state: SpectralState, dt: float, backend: str = "auto"):
    """One embedded step; returns (new_state, scaled_error_estimate)."""
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError("dt must be positive and finite")
    stepper, _ = make_stepper(system, backend)
    y = state.pack().astype(float, copy=True)
    k1 = stepper.rhs(y)
    y5, err_norm, _, _ = stepper.step(y, k1, dt, 1e-10, 1e-8)
    return SpectralState.unpack(state.t + dt, y5), err_norm


def _modal_basis_rows(roots, coeffs, tol=1e-4):
    """Group near-identical cubic roots and give confluent basis descriptors.

    Returns a list of (s, power) pairs meaning t^power * exp(s t).  The
    companion eigensolve scatters an m-fold root over a disc of radius
    ~eps^(1/m) (6e-6 for a triple), so the grouping tolerance is relative
    and much wider than that.  Each cluster representative is then refined
    exactly: a triple root of the cubic is -c1/(3 c0), a double root is the
    root of the derivative quadratic nearest the cluster centroid.
    """
    roots = sorted(roots, key=lambda z: (z.real, z.imag))
    groups = []
    for r in roots:
        for g in groups:
            if abs(r - g[0][0]) <= tol * max(1.0, abs(r), abs(g[0][0])):
                g.append((r, len(g)))
                break
        else:
            groups.append([(r, 0)])
    c0, c1, c2, _ = (complex(c) for c in coeffs)
    out = []
    for g in groups:
        s = sum(r for r, _ in g) / len(g)
        if len(g) == 3:
            s = -c1 / (3.0 * c0)
        elif len(g) == 2:
            # roots of 3 c0 s^2 + 2 c1 s + c2
            disc = cmath.sqrt(c1 * c1 - 3.0 * c0 * c2)
            cand = ((-c1 + disc) / (3.0 * c0), (-c1 - disc) / (3.0 * c0))
            s = min(cand, key=lambda z: abs(z - s))
        if len(g) > 1 and abs(s.imag) <= tol * max(1.0, abs(s)):
            # a real cubic cannot have a non-real multiple root
            s = complex(s.real, 0.0)
        for _, power in g:
            out.append((s, power))
    return out


def linear_modal_solution(params: ModelParams, lam, a0, b0, c0, times):
    """Exact solution of the uncoupled modal equations with f = 0.

    Each mode obeys tau a''' + alpha a'' + beta lam a' + gamma lam a = 0;
    the characteristic cubic is solved by a companion eigensolve, eigensolver
    scatter around repeated roots is collapsed, and the multiple root is
    recomputed exactly before switching to confluent t^k exp(st) branches.
    Returns (a, b, c) arrays of shape (len(times), n_modes).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    a0 = np.atleast_1d(np.asarray(a0, dtype=float))
    b0 = np.atleast_1d(np.asarray(b0, dtype=float))
    c0 = np.atleast_1d(np.asarray(c0, dtype=float))
    times = np.asarray(times, dtype=float)
    n = lam.shape[0]
    A = np.empty((times.shape[0], n))
    Bv = np.empty_like(A)
    Cv = np.empty_like(A)
    for i in range(n):
        coeffs = [params.tau, params.alpha, params.beta * lam[i], params.gamma * lam[i]]
        roots = np.roots(coeffs)
        basis = _modal_basis_rows(list(map(complex, roots)), coeffs)
        # match a(0), a'(0), a''(0)
        M = np.zeros((3, 3), dtype=complex)
        for col, (s, p) in enumerate(basis):
            if p == 0:
                M[:, col] = (1.0, s, s * s)
            elif p == 1:
                M[:, col] = (0.0, 1.0, 2.0 * s)
            else:
                M[:, col] = (0.0, 0.0, 2.0)
        coef = np.linalg.solve(M, np.array([a0[i], b0[i], c0[i]], dtype=complex))
        at = np.zeros(times.shape[0], dtype=complex)
        bt = np.zeros_like(at)
        ct = np.zeros_like(at)
        for (s, p), C in zip(basis, coef):
            est = np.exp(s * times)
            tp = times**p
            at += C * tp * est
            if p == 0:
                bt += C * s * est
                ct += C * s * s * est
            else:
                dtp = p * times ** (p - 1)
                d2tp = p * (p - 1) * times ** (p - 2) if p >= 2 else np.zeros_like(times)
                bt += C * (dtp + s * tp) * est
                ct += C * (d2tp + 2.0 * s * dtp + s * s * tp) * est
        A[:, i] = at.real
        Bv[:, i] = bt.real
        Cv[:, i] = ct.real
    return A, Bv, Cv
