"""Galerkin reduction of the third-order-in-time nonlinear acoustics model

    tau u_ttt + alpha u_tt = beta Lap(u_t) + gamma Lap(u) + (f(u))_tt

onto the lowest N Dirichlet eigenmodes.  With u = sum_i a_i(t) e_i and the
source expanded as (f(u))_tt = f'(u) u_tt + f''(u) u_t^2, the closed
first-order system in (a, b, c, va, wa) = (u, u_t, u_tt, int u, int int u)
coefficients reads

    a' = b,   b' = c,   va' = a,   wa' = va,
    tau c_i' = -alpha c_i - beta lam_i b_i - gamma lam_i a_i
               + <f'(u)u_tt + f''(u)u_t^2, e_i>.

The two time integrals ride along because the twice-integrated form of the
equation (the one the monitors check and the blow-up argument runs on) needs
them.  Nonlinear inner products are evaluated pseudospectrally with the sine
rule of :mod:`jmgtlab.domain`, which reproduces the analytic Galerkin
integrals exactly for polynomial f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Basis
from .nonlinearity import Nonlinearity

__all__ = ["ModelParams", "SpectralState", "LiftedSources", "GalerkinSystem"]


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (tau, alpha, beta, gamma); tau, beta, gamma positive."""

    tau: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        vals = (self.tau, self.alpha, self.beta, self.gamma)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")
        if self.tau <= 0 or self.beta <= 0 or self.gamma <= 0:
            raise ValueError("tau, beta, gamma must be positive")

    @property
    def B(self) -> float:
        """Coupling weight 4 gamma^2 / beta used by the energy functionals."""
        return 4.0 * self.gamma**2 / self.beta

    def regime(self) -> str:
        """Linear damping classification from the sign of alpha - tau*gamma/beta."""
        d = self.alpha - self.tau * self.gamma / self.beta
        if d > 0:
            return "stable"
        if d == 0:
            return "critical"
        return "unstable"


@dataclass(frozen=True)
class SpectralState:
    """Mode coefficients of (u, u_t, u_tt) plus running time integrals of u."""

    t: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    va: np.ndarray
    wa: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate([self.a, self.b, self.c, self.va, self.wa])

    @classmethod
    def unpack(cls, t: float, y: np.ndarray) -> "SpectralState":
        n = y.shape[0] // 5
        return cls(
            t=float(t),
            a=y[0:n].copy(),
            b=y[n : 2 * n].copy(),
            c=y[2 * n : 3 * n].copy(),
            va=y[3 * n : 4 * n].copy(),
            wa=y[4 * n : 5 * n].copy(),
        )


@dataclass(frozen=True)
class LiftedSources:
    """Initial-data functionals z1, z2 entering the integrated identities.

    z1_i = tau c_i(0) + alpha b_i(0) + beta lam_i a_i(0) - <f'(u0)u1, e_i>
    z2_i = tau b_i(0) + alpha a_i(0) - <f(u0), e_i>

    Once-integrated:  tau u_tt + alpha u_t = beta Lap u + gamma Lap(int u)
                                             + f'(u)u_t + z1
    Twice-integrated: tau u_t + alpha u = beta Lap(int u)
                      + gamma Lap(int int u) + f(u) + t z1 + z2
    """

    z1: np.ndarray
    z2: np.ndarray


class GalerkinSystem:
    def __init__(self, basis: Basis, params: ModelParams, nonlin: Nonlinearity):
        self.basis = basis
        self.params = params
        self.nonlin = nonlin
        self.n = basis.n_modes
        self.lam = basis.eigenvalues

    # -- initial data ------------------------------------------------------

    def init_state(self, u0, u1, u2, from_grid: bool = False) -> SpectralState:
        """State at t = 0 from coefficient vectors or grid samples."""
        fields = []
        for name, u in (("u0", u0), ("u1", u1), ("u2", u2)):
            u = np.asarray(u, dtype=float)
            if from_grid:
                if u.shape != (self.basis.grid.n_nodes,):
                    raise ValueError(f"{name}: expected {self.basis.grid.n_nodes} grid values")
                u = self.basis.project(u)
            elif u.shape != (self.n,):
                raise ValueError(f"{name}: expected {self.n} coefficients")
            if not np.all(np.isfinite(u)):
                raise ValueError(f"{name} contains non-finite entries")
            fields.append(u)
        zeros = np.zeros(self.n)
        return SpectralState(0.0, fields[0], fields[1], fields[2], zeros.copy(), zeros.copy())

    # -- nonlinear projections ---------------------------------------------

    def project_f(self, a: np.ndarray) -> np.ndarray:
        """<f(u), e_i> for u synthesized from coefficients a."""
        if self.nonlin.kind == "zero":
            return np.zeros(self.n)
        ug = self.basis.synthesize(a)
        with np.errstate(over="ignore", invalid="ignore"):
            fg = self.nonlin.f(ug)
        return self.basis.project_sine(fg)

    def project_f1v(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        """<f'(u) v, e_i> for u, v synthesized from coefficients."""
        if self.nonlin.kind == "zero":
            return np.zeros(self.n)
        ug = self.basis.synthesize(a)
        vg = self.basis.synthesize(v)
        with np.errstate(over="ignore", invalid="ignore"):
            fg = self.nonlin.f1(ug) * vg
        return self.basis.project_sine(fg)

    def nonlinear_projection(self, a, b, c) -> np.ndarray:
        """<f'(u)u_tt + f''(u)u_t^2, e_i> evaluated pseudospectrally."""
        if self.nonlin.kind == "zero":
            return np.zeros(self.n)
        E = self.basis.mode_matrix
        ug = E @ a
        utg = E @ b
        uttg = E @ c
        with np.errstate(over="ignore", invalid="ignore"):
            combo = self.nonlin.f1(ug) * uttg + self.nonlin.f2(ug) * utg * utg
        return self.basis.project_sine(combo)

    # -- dynamics ------------------------------------------------------------

    def rhs_packed(self, y: np.ndarray) -> np.ndarray:
        """Time derivative of the packed vector [a, b, c, va, wa]."""
        n = self.n
        a, b, c = y[0:n], y[n : 2 * n], y[2 * n : 3 * n]
        va = y[3 * n : 4 * n]
        p = self.params
        dy = np.empty_like(y)
        dy[0:n] = b
        dy[n : 2 * n] = c
        dy[2 * n : 3 * n] = (
            -p.alpha * c
            - p.beta * self.lam * b
            - p.gamma * self.lam * a
            + self.nonlinear_projection(a, b, c)
        ) / p.tau
        dy[3 * n : 4 * n] = a
        dy[4 * n : 5 * n] = va
        return dy

    def rhs(self, state: SpectralState) -> SpectralState:
        dy = self.rhs_packed(state.pack())
        return SpectralState.unpack(state.t, dy)

    def lifted_sources(self, state0: SpectralState) -> LiftedSources:
        """z1, z2 from the (projected) initial data; see LiftedSources."""
        p = self.params
        z1 = (
            p.tau * state0.c
            + p.alpha * state0.b
            + p.beta * self.lam * state0.a
            - self.project_f1v(state0.a, state0.b)
        )
        z2 = p.tau * state0.b + p.alpha * state0.a - self.project_f(state0.a)
        return LiftedSources(z1=z1, z2=z2)

    # -- norms ---------------------------------------------------------------

    def norms(self, state: SpectralState) -> dict:
        """Spectral Sobolev seminorms and the first-mode trace pair.

        Overflow to inf is an accepted outcome for extreme states; the
        integrator's finiteness checks handle it downstream.
        """
        lam = self.lam
        kap = self.basis.kappa
        with np.errstate(over="ignore"):
            return {
                "u_linf": self.basis.linf(state.a),
                "u_l2": float(np.linalg.norm(state.a)),
                "ut_h1": float(np.sqrt(np.sum(lam * state.b**2))),
                "u_h2": float(np.sqrt(np.sum(lam**2 * state.a**2))),
                "utt_h1": float(np.sqrt(np.sum(lam * state.c**2))),
                "ut_h2": float(np.sqrt(np.sum(lam**2 * state.b**2))),
                "y": float(state.a[0] / kap),
                "y_prime": float(state.b[0] / kap),
            }
