"""Stepper backend selection: compiled kernel when available, numpy otherwise.

The compiled extension is optional.  ``auto`` resolves to it whenever it
imported cleanly and the nonlinearity is one of the shipped families; custom
callables always run on the python backend.  The resolved name is echoed in
run reports so results stay reproducible.
"""

from __future__ import annotations

from ._stepper_py import PyStepper

try:
    from ._stepper_cy import CyStepper
except ImportError:  # extension not built; fall back silently
    CyStepper = None

__all__ = ["available_backends", "make_stepper"]


def available_backends() -> list[str]:
    names = ["python"]
    if CyStepper is not None:
        names.insert(0, "compiled")
    return names


def make_stepper(system, backend: str = "auto"):
    """Return (stepper, resolved_name) for the requested backend."""
    if backend not in ("auto", "compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    compiled_ok = CyStepper is not None and system.nonlin.kernel_id >= 0
    if backend == "auto":
        if compiled_ok:
            return CyStepper(system), "compiled"
        return PyStepper(system), "python"
    if backend == "compiled":
        if CyStepper is None:
            raise ValueError("compiled backend requested but the extension is not built")
        if system.nonlin.kernel_id < 0:
            raise ValueError("compiled backend does not support custom nonlinearities")
        return CyStepper(system), "compiled"
    return PyStepper(system), "python"
