"""Compare the compiled stepper against the numpy fallback.

Times single right-hand-side evaluations, single embedded steps, and a
full adaptive run for each shipped nonlinearity over a range of mode
counts, and reports the speedup.  Usage:

    python3 benchmarks/bench_backends.py [--modes 4 16 64] [--repeat 5]
"""

import argparse
import time

import numpy as np

from jmgtlab.backend import available_backends, make_stepper
from jmgtlab.domain import DomainSpec, build_basis
from jmgtlab.galerkin import GalerkinSystem, ModelParams
from jmgtlab.integrator import IntegratorConfig, integrate
from jmgtlab.nonlinearity import exponential, quadratic, zero


def _system(n, nl):
    basis = build_basis(DomainSpec.interval(), n)
    params = ModelParams(tau=1.0, alpha=2.0, beta=1.0, gamma=1.0)
    return GalerkinSystem(basis, params, nl)


def _time(fn, repeat, inner):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_kernels(n, nl, repeat):
    sysn = _system(n, nl)
    idx = np.arange(1.0, n + 1.0)
    state = sysn.init_state(0.1 / idx**2, np.zeros(n), np.zeros(n))
    y = state.pack()
    inner = max(1, int(2e5 / (n * n)))
    rows = {}
    for backend in ("python", "compiled"):
        if backend not in available_backends():
            continue
        stepper, _ = make_stepper(sysn, backend)
        k1 = stepper.rhs(y)
        rows[backend] = (
            _time(lambda: stepper.rhs(y), repeat, inner),
            _time(lambda: stepper.step(y, k1, 1e-4, 1e-10, 1e-8), repeat, inner),
        )
    return rows


def bench_run(n, nl, repeat):
    sysn = _system(n, nl)
    idx = np.arange(1.0, n + 1.0)
    state = sysn.init_state(0.1 / idx**2, 0.05 / idx**2, np.zeros(n))
    cfg = {}
    out = {}
    for backend in ("python", "compiled"):
        if backend not in available_backends():
            continue
        cfg[backend] = IntegratorConfig(t_end=5.0, sample_dt=0.5, backend=backend)
        out[backend] = _time(lambda: integrate(sysn, state, cfg[backend]), repeat, 1)
    n_steps = integrate(sysn, state, cfg[max(cfg)]).stats["n_accept"]
    return out, n_steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, nargs="+", default=[4, 16, 64])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if "compiled" not in available_backends():
        print("compiled extension not built; timing the python backend only")

    kinds = [("zero", zero()), ("quadratic", quadratic(1.0)), ("exponential", exponential(0.5))]
    print(f"{'kind':<12} {'N':>4} {'rhs py':>10} {'rhs cy':>10} {'step py':>10} "
          f"{'step cy':>10} {'speedup':>8}")
    for kind, nl in kinds:
        for n in args.modes:
            rows = bench_kernels(n, nl, args.repeat)
            py = rows["python"]
            cy = rows.get("compiled")
            speed = f"{py[1] / cy[1]:7.1f}x" if cy else "     n/a"
            cy_txt = (f"{cy[0] * 1e6:9.1f}u {cy[1] * 1e6:9.1f}u".split()
                      if cy else ["      n/a", "      n/a"])
            print(f"{kind:<12} {n:>4} {py[0] * 1e6:9.1f}u {cy_txt[0]:>10} "
                  f"{py[1] * 1e6:9.1f}u {cy_txt[1]:>10} {speed}")

    print()
    print(f"{'kind':<12} {'N':>4} {'run py':>10} {'run cy':>10} {'speedup':>8} {'steps':>7}")
    for kind, nl in kinds:
        for n in args.modes:
            out, n_steps = bench_run(n, nl, args.repeat)
            py = out["python"]
            cy = out.get("compiled")
            speed = f"{py / cy:7.1f}x" if cy else "     n/a"
            cy_txt = f"{cy * 1e3:8.2f}ms" if cy else "      n/a"
            print(f"{kind:<12} {n:>4} {py * 1e3:8.2f}ms {cy_txt:>10} {speed} {n_steps:>7}")


if __name__ == "__main__":
    main()
