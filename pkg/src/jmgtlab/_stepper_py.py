"""Numpy fallback for the fused Dormand-Prince 5(4) step.

Mirrors the compiled kernel in `_stepper_cy.pyx` stage for stage; the two
must stay in lockstep (the backends are cross-checked by tests).  The first
stage derivative is carried by the caller (FSAL), so one attempted step
costs six right-hand-side evaluations.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince 5(4) tableau
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# error weights: 5th-order minus 4th-order solution
E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_A_ROWS = [np.array(row) for row in A]
_E_ROW = np.array(E)


class PyStepper:
    """Holds the system tables and steps packed vectors [a,b,c,va,wa]."""

    def __init__(self, system):
        self.system = system
        self.n = system.n
        self.lam = system.lam
        self.E_grid = system.basis.mode_matrix
        self.PS = system.basis._proj_sine
        p = system.params
        self.tau, self.alpha = p.tau, p.alpha
        self.beta, self.gamma = p.beta, p.gamma
        nl = system.nonlin
        self.fkind = nl.kind
        self.fk = nl.k
        self.f1, self.f2 = nl.f1, nl.f2
        self._K = np.empty((7, 5 * self.n))

    def rhs(self, y: np.ndarray) -> np.ndarray:
        n = self.n
        a, b, c = y[0:n], y[n : 2 * n], y[2 * n : 3 * n]
        dy = np.empty_like(y)
        dy[0:n] = b
        dy[n : 2 * n] = c
        if self.fkind == "zero":
            nlp = 0.0
        else:
            ug = self.E_grid @ a
            utg = self.E_grid @ b
            uttg = self.E_grid @ c
            with np.errstate(over="ignore", invalid="ignore"):
                if self.fkind == "quadratic":
                    combo = (2.0 * self.fk) * (ug * uttg + utg * utg)
                elif self.fkind == "exponential":
                    ex = np.exp(ug)
                    combo = self.fk * ((ex - 1.0) * uttg + ex * utg * utg)
                else:
                    combo = self.f1(ug) * uttg + self.f2(ug) * utg * utg
            nlp = self.PS @ combo
        dy[2 * n : 3 * n] = (
            -self.alpha * c - self.beta * self.lam * b - self.gamma * self.lam * a + nlp
        ) / self.tau
        dy[3 * n : 4 * n] = a
        dy[4 * n : 5 * n] = y[3 * n : 4 * n]
        return dy

    def step(self, y, k1, dt, atol, rtol):
        """One DP54 attempt from y with stage-1 slope k1.

        Returns (y5, err_norm, k_new, linf_new): the 5th-order update, the
        scaled RMS of the embedded error estimate, the slope at the new
        point (FSAL candidate) and the grid sup norm of the new u field.
        """
        K = self._K
        K[0] = k1
        for s in range(1, 6):
            ys = y + dt * (_A_ROWS[s] @ K[:s])
            K[s] = self.rhs(ys)
        y5 = y + dt * (_A_ROWS[6] @ K[:6])
        K[6] = self.rhs(y5)
        err = dt * (_E_ROW @ K)
        with np.errstate(over="ignore", invalid="ignore"):
            # error is scaled per layer (a, b, c, va, wa): grid round-off in
            # any coefficient is proportional to the field magnitude, so a
            # per-coefficient relative scale would pin dt at noise level for
            # dynamically-zero modes of a large field
            mag = np.maximum(np.abs(y), np.abs(y5)).reshape(5, self.n).max(axis=1)
            scale = np.repeat(atol + rtol * mag, self.n)
            err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
            linf = float(np.abs(self.E_grid @ y5[0 : self.n]).max())
        return y5, err_norm, K[6].copy(), linf
