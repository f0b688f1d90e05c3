"""Nonlinearities f(u) with derivatives, growth hypotheses and tail integrals.

The model needs f through its third derivative (the expanded source is
f'(u)u_tt + f''(u)u_t^2, and existence budgets use sup |f'|+|f''|+|f'''|).
Shipped families:

* ``zero``         f = 0 (linear model)
* ``quadratic``    f = k u^2
* ``exponential``  f = k (exp(u) - 1 - u)
* ``custom``       caller supplies f, f', f'', f''' explicitly (no autodiff)

Blow-up machinery additionally cares about three structural hypotheses:
convexity (f'' >= 0), superlinear growth (f(s)/s -> infinity) and an
integrable tail (int_a^inf ds/f(s) < infinity).  For the shipped families
these are decided analytically; for custom ones they are estimated by
conservative sampling and never certified symbolically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

__all__ = [
    "Nonlinearity",
    "BlowUpHypotheses",
    "zero",
    "quadratic",
    "exponential",
    "custom",
    "tail_integral",
    "derivative_sup_bound",
]

# ids understood by the compiled stepper; custom forces the python backend
KERNEL_IDS = {"zero": 0, "quadratic": 1, "exponential": 2}


@dataclass(frozen=True)
class BlowUpHypotheses:
    """Sampled or analytic verdicts on the growth structure of f."""

    convex: bool
    superlinear: bool
    integrable_tail: bool
    analytic: bool  # True when decided in closed form, False when sampled


@dataclass(frozen=True)
class Nonlinearity:
    kind: str
    k: float
    f: Callable[[np.ndarray], np.ndarray]
    f1: Callable[[np.ndarray], np.ndarray]
    f2: Callable[[np.ndarray], np.ndarray]
    f3: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    @property
    def kernel_id(self) -> int:
        return KERNEL_IDS.get(self.kind, -1)

    def hypotheses(self, xi0: float = 1.0) -> BlowUpHypotheses:
        if xi0 <= 0:
            raise ValueError("xi0 must be positive")
        if self.kind == "zero":
            return BlowUpHypotheses(True, False, False, analytic=True)
        if self.kind == "quadratic":
            pos = self.k > 0
            return BlowUpHypotheses(self.k >= 0, pos, pos, analytic=True)
        if self.kind == "exponential":
            pos = self.k > 0
            return BlowUpHypotheses(self.k >= 0, pos, pos, analytic=True)
        return _sampled_hypotheses(self, xi0)


def zero() -> Nonlinearity:
    z = lambda u: np.zeros_like(np.asarray(u, dtype=float))
    return Nonlinearity("zero", 0.0, z, z, z, z, name="0")


def quadratic(k: float) -> Nonlinearity:
    k = float(k)
    if k == 0:
        raise ValueError("quadratic coefficient must be nonzero; use zero()")
    return Nonlinearity(
        "quadratic",
        k,
        lambda u: k * np.square(u),
        lambda u: 2.0 * k * np.asarray(u, dtype=float),
        lambda u: np.full_like(np.asarray(u, dtype=float), 2.0 * k),
        lambda u: np.zeros_like(np.asarray(u, dtype=float)),
        name=f"{k}*u^2",
    )


def exponential(k: float) -> Nonlinearity:
    k = float(k)
    if k == 0:
        raise ValueError("exponential coefficient must be nonzero; use zero()")
    return Nonlinearity(
        "exponential",
        k,
        lambda u: k * (np.exp(u) - 1.0 - np.asarray(u, dtype=float)),
        lambda u: k * (np.exp(u) - 1.0),
        lambda u: k * np.exp(u),
        lambda u: k * np.exp(u),
        name=f"{k}*(exp(u)-1-u)",
    )


def custom(f, f1, f2, f3, name: str = "custom") -> Nonlinearity:
    """Explicit derivative stack; the caller is responsible for consistency."""
    return Nonlinearity("custom", 0.0, f, f1, f2, f3, name=name)


def _sampled_hypotheses(nl: Nonlinearity, xi0: float) -> BlowUpHypotheses:
    # Conservative heuristics on finite samples; a pass is evidence, not proof.
    with np.errstate(over="ignore", invalid="ignore"):
        span = max(10.0, 10.0 * xi0)
        xs = np.linspace(-span, span, 4001)
        f2v = np.asarray(nl.f2(xs), dtype=float)
        scale = np.nanmax(np.abs(f2v)) if np.isfinite(f2v).any() else 1.0
        convex = bool(np.all(f2v >= -1e-12 * (1.0 + scale)))

        geo = xi0 * 2.0 ** np.arange(0, 41)
        ratios = np.asarray(nl.f(geo), dtype=float) / geo
        finite = ratios[np.isfinite(ratios)]
        superlinear = (
            len(finite) >= 5
            and bool(np.all(np.diff(finite) > 0))
            and finite[-1] > 100.0 * (abs(finite[0]) + 1.0)
        )

        integrable = False
        if superlinear:
            tails = []
            ok = True
            for a in (xi0, 4.0 * xi0, 16.0 * xi0):
                try:
                    tails.append(tail_integral(nl, a))
                except (ValueError, RuntimeError):
                    ok = False
                    break
            integrable = (
                ok
                and all(math.isfinite(t) and t > 0 for t in tails)
                and tails[0] > tails[1] > tails[2]
            )
    return BlowUpHypotheses(convex, superlinear, integrable, analytic=False)


def tail_integral(nl: Nonlinearity, a: float, method: str = "auto") -> float:
    """int_a^infinity ds / f(s).

    ``method="closed"`` uses the quadratic closed form 1/(k a) and raises for
    other kinds; ``method="quad"`` forces adaptive quadrature under the
    substitution s = a/t, which maps the tail onto (0, 1]; ``"auto"`` picks
    the closed form when one exists.
    """
    if not (a > 0) or not math.isfinite(a):
        raise ValueError("tail integral needs a positive finite lower limit")
    fa = float(nl.f(np.array([a]))[0])
    if not fa > 0:
        raise ValueError(f"f({a}) = {fa} is not positive; tail undefined")
    if method not in ("auto", "closed", "quad"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "closed") and nl.kind == "quadratic":
        return 1.0 / (nl.k * a)
    if method == "closed":
        raise ValueError(f"no closed-form tail for kind {nl.kind!r}")

    def integrand(t: float) -> float:
        if t <= 0.0:
            return 0.0
        with np.errstate(over="ignore", invalid="ignore"):
            val = float(nl.f(np.array([a / t]))[0])
        if not math.isfinite(val):  # f overflowed, integrand is ~0 there
            return 0.0
        if val <= 0.0:
            raise ValueError("f not positive on the tail; integral undefined")
        return a / (t * t * val)

    result, err = quad(integrand, 0.0, 1.0, limit=200)
    if not math.isfinite(result) or err > 1e-6 * (1.0 + abs(result)):
        raise RuntimeError(f"tail quadrature failed: value {result}, error {err}")
    return result


def derivative_sup_bound(nl: Nonlinearity, radius: float) -> float:
    """sup over [-radius, radius] of |f'| + |f''| + |f'''|.

    Closed form for the shipped families; dense sampling with a 5% safety
    inflation for custom ones.
    """
    if radius < 0 or not math.isfinite(radius):
        raise ValueError("radius must be finite and nonnegative")
    R = float(radius)
    if nl.kind == "zero":
        return 0.0
    if nl.kind == "quadratic":
        return 2.0 * abs(nl.k) * R + 2.0 * abs(nl.k)
    if nl.kind == "exponential":
        # each |derivative| is maximal at +R for k > 0 (and in |.| for k < 0)
        return abs(nl.k) * (math.expm1(R) + 2.0 * math.exp(R))
    xs = np.linspace(-R, R, 100_001)
    with np.errstate(over="ignore", invalid="ignore"):
        total = np.abs(nl.f1(xs)) + np.abs(nl.f2(xs)) + np.abs(nl.f3(xs))
    sup = float(np.nanmax(total))
    if not math.isfinite(sup):
        raise ValueError("derivative bound is infinite on the requested range")
    return 1.05 * sup
