# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fused Dormand-Prince 5(4) step for the Galerkin system.

Stage-for-stage mirror of `_stepper_py.PyStepper`; keep the two in sync.
Only the shipped nonlinearities (zero/quadratic/exponential) are compiled;
custom callables stay on the python backend.
"""

import numpy as np

from libc.math cimport exp, fabs, sqrt

# Dormand-Prince 5(4) coefficients
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef class CyStepper:
    cdef Py_ssize_t n, nn, m
    cdef int fkind
    cdef double fk, tau, alpha, beta, gamma
    cdef double[::1] lam, combo, nl, ytmp
    cdef double[:, ::1] Eg, PS, K

    def __init__(self, system):
        nl = system.nonlin
        if nl.kernel_id < 0:
            raise ValueError("compiled stepper supports only shipped nonlinearities")
        self.n = system.n
        self.m = 5 * self.n
        self.fkind = nl.kernel_id
        self.fk = nl.k
        p = system.params
        self.tau, self.alpha = p.tau, p.alpha
        self.beta, self.gamma = p.beta, p.gamma
        self.lam = np.ascontiguousarray(system.lam, dtype=np.float64)
        self.Eg = np.ascontiguousarray(system.basis.mode_matrix, dtype=np.float64)
        self.PS = np.ascontiguousarray(system.basis._proj_sine, dtype=np.float64)
        self.nn = self.Eg.shape[0]
        self.combo = np.empty(self.nn)
        self.nl = np.empty(self.n)
        self.ytmp = np.empty(self.m)
        self.K = np.empty((7, self.m))

    cdef void _rhs(self, double[::1] y, double[::1] knext) noexcept:
        cdef Py_ssize_t n = self.n, nn = self.nn, i, j
        cdef double ug, utg, uttg, e, ex, s
        if self.fkind != 0:
            for j in range(nn):
                ug = 0.0
                utg = 0.0
                uttg = 0.0
                for i in range(n):
                    e = self.Eg[j, i]
                    ug += e * y[i]
                    utg += e * y[n + i]
                    uttg += e * y[2 * n + i]
                if self.fkind == 1:
                    self.combo[j] = 2.0 * self.fk * (ug * uttg + utg * utg)
                else:
                    ex = exp(ug)
                    self.combo[j] = self.fk * ((ex - 1.0) * uttg + ex * utg * utg)
            for i in range(n):
                s = 0.0
                for j in range(nn):
                    s += self.PS[i, j] * self.combo[j]
                self.nl[i] = s
        else:
            for i in range(n):
                self.nl[i] = 0.0
        for i in range(n):
            knext[i] = y[n + i]
            knext[n + i] = y[2 * n + i]
            knext[2 * n + i] = (
                -self.alpha * y[2 * n + i]
                - self.beta * self.lam[i] * y[n + i]
                - self.gamma * self.lam[i] * y[i]
                + self.nl[i]
            ) / self.tau
            knext[3 * n + i] = y[i]
            knext[4 * n + i] = y[3 * n + i]

    def rhs(self, double[::1] y):
        out = np.empty(self.m)
        cdef double[::1] view = out
        self._rhs(y, view)
        return out

    def step(self, double[::1] y, double[::1] k1, double dt, double atol, double rtol):
        """One DP54 attempt; returns (y5, err_norm, k_new, linf_new)."""
        cdef Py_ssize_t m = self.m, n = self.n, nn = self.nn, i, j
        cdef double[:, ::1] K = self.K
        cdef double[::1] yt = self.ytmp
        cdef double err_i, scale, acc, s, linf, absv
        y5_arr = np.empty(m)
        knew_arr = np.empty(m)
        cdef double[::1] y5 = y5_arr
        cdef double[::1] knew = knew_arr

        for i in range(m):
            K[0, i] = k1[i]
        for i in range(m):
            yt[i] = y[i] + dt * (A21 * K[0, i])
        self._rhs(yt, K[1])
        for i in range(m):
            yt[i] = y[i] + dt * (A31 * K[0, i] + A32 * K[1, i])
        self._rhs(yt, K[2])
        for i in range(m):
            yt[i] = y[i] + dt * (A41 * K[0, i] + A42 * K[1, i] + A43 * K[2, i])
        self._rhs(yt, K[3])
        for i in range(m):
            yt[i] = y[i] + dt * (
                A51 * K[0, i] + A52 * K[1, i] + A53 * K[2, i] + A54 * K[3, i]
            )
        self._rhs(yt, K[4])
        for i in range(m):
            yt[i] = y[i] + dt * (
                A61 * K[0, i] + A62 * K[1, i] + A63 * K[2, i]
                + A64 * K[3, i] + A65 * K[4, i]
            )
        self._rhs(yt, K[5])
        for i in range(m):
            y5[i] = y[i] + dt * (
                B1 * K[0, i] + B3 * K[2, i] + B4 * K[3, i]
                + B5 * K[4, i] + B6 * K[5, i]
            )
        self._rhs(y5, K[6])

        # per-layer error scale, see PyStepper.step
        cdef double lay[5]
        cdef Py_ssize_t l
        for l in range(5):
            lay[l] = 0.0
        for i in range(m):
            absv = fabs(y[i])
            if fabs(y5[i]) > absv:
                absv = fabs(y5[i])
            if absv > lay[i // n]:
                lay[i // n] = absv
        acc = 0.0
        for i in range(m):
            err_i = dt * (
                E1 * K[0, i] + E3 * K[2, i] + E4 * K[3, i]
                + E5 * K[4, i] + E6 * K[5, i] + E7 * K[6, i]
            )
            scale = atol + rtol * lay[i // n]
            acc += (err_i / scale) * (err_i / scale)
            knew[i] = K[6, i]
        linf = 0.0
        for j in range(nn):
            s = 0.0
            for i in range(n):
                s += self.Eg[j, i] * y5[i]
            absv = fabs(s)
            if absv > linf:
                linf = absv
        return y5_arr, sqrt(acc / m), knew_arr, linf
