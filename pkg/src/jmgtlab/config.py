"""Run configuration: strict JSON schema, validation, and resolved echo.

A run config is a plain JSON object.  Validation is strict: unknown keys
are rejected at every level, so a typo cannot silently fall back to a
default.  ``resolve_config`` fills defaults and normalizes the initial
data to explicit spectral coefficients; the resolved form is what run
reports echo, and re-running it reproduces the original series bitwise.
"""

import json
import math

import numpy as np

from .backend import make_stepper
from .certificate import make_certified_data
from .domain import DomainSpec, build_basis
from .galerkin import GalerkinSystem, ModelParams
from .integrator import IntegratorConfig
from .monitors import CSV_COLUMNS, DEFAULT_TOGGLES
from . import nonlinearity


class ConfigError(ValueError):
    """Raised for any schema, type, or constraint violation in a config."""


_INTEGRATOR_DEFAULTS = {
    "t_end": None,  # required
    "rel_tol": 1e-8,
    "abs_tol": 1e-10,
    "dt_init": None,
    "dt_min": 1e-12,
    "dt_max": None,
    "u_max": 1e6,
    "sample_dt": 0.01,
    "max_steps": 10_000_000,
    "fixed_dt": None,
    "backend": "auto",
}

_MONITOR_DEFAULTS = {"xi0": 1.0, "K0": None, **DEFAULT_TOGGLES}

_OUTPUT_DEFAULTS = {"dir": "run_output", "plots": ["u_linf", "y", "F_N"]}

_PRESETS = ("zero", "first_mode", "flat_spectrum", "decaying_spectrum")


def _require_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(obj).__name__}")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _number(obj, key, where, positive=False, nonneg=False, allow_none=False):
    if key not in obj or obj[key] is None:
        if allow_none:
            return None
        raise ConfigError(f"{where}.{key} is required")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{where}.{key} must be > 0")
    if nonneg and v < 0:
        raise ConfigError(f"{where}.{key} must be >= 0")
    return v


def _integer(obj, key, where, minimum=1, allow_none=False):
    if key not in obj or obj[key] is None:
        if allow_none:
            return None
        raise ConfigError(f"{where}.{key} is required")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}")
    return v


def _boolean(obj, key, where, default):
    if key not in obj:
        return default
    v = obj[key]
    if not isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be a boolean, got {v!r}")
    return v


def _float_list(obj, key, where, length=None, allow_none=False):
    if key not in obj or obj[key] is None:
        if allow_none:
            return None
        raise ConfigError(f"{where}.{key} is required")
    v = obj[key]
    if not isinstance(v, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        raise ConfigError(f"{where}.{key} must be a list of numbers")
    out = [float(x) for x in v]
    if any(not math.isfinite(x) for x in out):
        raise ConfigError(f"{where}.{key} entries must be finite")
    if length is not None and len(out) != length:
        raise ConfigError(f"{where}.{key} must have length {length}, got {len(out)}")
    return out


def _resolve_domain(raw):
    _require_keys(raw, {"lengths"}, "domain")
    lengths = _float_list(raw, "lengths", "domain")
    if not 1 <= len(lengths) <= 3:
        raise ConfigError("domain.lengths must have 1 to 3 entries")
    if any(x <= 0 for x in lengths):
        raise ConfigError("domain.lengths entries must be > 0")
    return {"lengths": lengths}


def _resolve_params(raw):
    _require_keys(raw, {"tau", "alpha", "beta", "gamma"}, "params")
    out = {
        "tau": _number(raw, "tau", "params", positive=True),
        "alpha": _number(raw, "alpha", "params"),
        "beta": _number(raw, "beta", "params", positive=True),
        "gamma": _number(raw, "gamma", "params", positive=True),
    }
    return out


def _resolve_nonlinearity(raw):
    _require_keys(raw, {"kind", "k"}, "nonlinearity")
    kind = raw.get("kind")
    if kind not in ("zero", "quadratic", "exponential"):
        raise ConfigError(
            f"nonlinearity.kind must be one of zero/quadratic/exponential, got {kind!r}"
        )
    out = {"kind": kind}
    if kind == "zero":
        if "k" in raw:
            raise ConfigError("nonlinearity.k is not accepted for kind 'zero'")
    else:
        out["k"] = _number(raw, "k", "nonlinearity")
    return out


def _resolve_initial_data(raw, n_modes):
    _require_keys(
        raw,
        {"mode", "u0", "u1", "u2", "name", "amplitude", "u1_amplitude", "T0",
         "margin", "xi0", "method"},
        "initial_data",
    )
    mode = raw.get("mode")
    if mode == "coefficients":
        allowed = {"mode", "u0", "u1", "u2"}
        _require_keys(raw, allowed, "initial_data(coefficients)")
        return {
            "mode": "coefficients",
            "u0": _float_list(raw, "u0", "initial_data", length=n_modes),
            "u1": _float_list(raw, "u1", "initial_data", length=n_modes),
            "u2": _float_list(raw, "u2", "initial_data", length=n_modes),
        }
    if mode == "preset":
        allowed = {"mode", "name", "amplitude", "u1_amplitude"}
        _require_keys(raw, allowed, "initial_data(preset)")
        name = raw.get("name")
        if name not in _PRESETS:
            raise ConfigError(f"initial_data.name must be one of {_PRESETS}, got {name!r}")
        amp = raw["amplitude"] if "amplitude" in raw else 1.0
        amp = _number({"amplitude": amp}, "amplitude", "initial_data")
        u1a = raw["u1_amplitude"] if "u1_amplitude" in raw else 0.0
        u1a = _number({"u1_amplitude": u1a}, "u1_amplitude", "initial_data")
        return {"mode": "preset", "name": name, "amplitude": amp, "u1_amplitude": u1a}
    if mode == "certified":
        allowed = {"mode", "T0", "margin", "xi0", "method"}
        _require_keys(raw, allowed, "initial_data(certified)")
        method = raw.get("method", "auto")
        if method not in ("auto", "closed", "quad"):
            raise ConfigError("initial_data.method must be auto, closed, or quad")
        return {
            "mode": "certified",
            "T0": _number(raw, "T0", "initial_data", positive=True),
            "margin": _number(raw, "margin", "initial_data", positive=True),
            "xi0": _number({"xi0": raw.get("xi0", 1.0)}, "xi0", "initial_data", positive=True),
            "method": method,
        }
    raise ConfigError(
        f"initial_data.mode must be coefficients, preset, or certified, got {mode!r}"
    )


def _resolve_integrator(raw):
    _require_keys(raw, set(_INTEGRATOR_DEFAULTS), "integrator")
    out = {}
    out["t_end"] = _number(raw, "t_end", "integrator", positive=True)
    for key in ("rel_tol", "abs_tol", "dt_min", "u_max", "sample_dt"):
        out[key] = _number(
            {key: raw.get(key, _INTEGRATOR_DEFAULTS[key])}, key, "integrator", positive=True
        )
    for key in ("dt_init", "dt_max", "fixed_dt"):
        v = _number({key: raw.get(key)}, key, "integrator", positive=True, allow_none=True)
        out[key] = v
    out["max_steps"] = _integer(
        {"max_steps": raw.get("max_steps", _INTEGRATOR_DEFAULTS["max_steps"])},
        "max_steps",
        "integrator",
    )
    backend = raw.get("backend", "auto")
    if backend not in ("auto", "compiled", "python"):
        raise ConfigError("integrator.backend must be auto, compiled, or python")
    out["backend"] = backend
    return out


def _resolve_monitors(raw):
    _require_keys(raw, set(_MONITOR_DEFAULTS), "monitors")
    out = {"xi0": _number({"xi0": raw.get("xi0", 1.0)}, "xi0", "monitors", positive=True)}
    out["K0"] = _number({"K0": raw.get("K0")}, "K0", "monitors", positive=True, allow_none=True)
    for key in DEFAULT_TOGGLES:
        out[key] = _boolean(raw, key, "monitors", True)
    return out


def _resolve_output(raw):
    _require_keys(raw, {"dir", "plots"}, "output")
    outdir = raw.get("dir", _OUTPUT_DEFAULTS["dir"])
    if not isinstance(outdir, str) or not outdir:
        raise ConfigError("output.dir must be a non-empty string")
    plots = raw.get("plots", list(_OUTPUT_DEFAULTS["plots"]))
    if not isinstance(plots, list) or not all(isinstance(p, str) for p in plots):
        raise ConfigError("output.plots must be a list of column names")
    bad = [p for p in plots if p not in CSV_COLUMNS or p == "t"]
    if bad:
        raise ConfigError(f"output.plots entries not plottable columns: {bad}")
    return {"dir": outdir, "plots": list(plots)}


def resolve_config(raw: dict) -> dict:
    """Validate a raw config dict and fill defaults.  Strict at every level."""
    top = {
        "domain", "n_modes", "grid_m", "params", "nonlinearity",
        "initial_data", "integrator", "monitors", "output", "seed",
    }
    _require_keys(raw, top, "config")
    for key in ("domain", "params", "nonlinearity", "initial_data", "integrator"):
        if key not in raw:
            raise ConfigError(f"config.{key} is required")
    cfg = {}
    cfg["domain"] = _resolve_domain(raw["domain"])
    cfg["n_modes"] = _integer(raw, "n_modes", "config")
    ndim = len(cfg["domain"]["lengths"])
    grid_m = raw.get("grid_m")
    if grid_m is None:
        cfg["grid_m"] = None
    elif isinstance(grid_m, int) and not isinstance(grid_m, bool):
        cfg["grid_m"] = [grid_m] * ndim
    else:
        lst = _float_list({"grid_m": grid_m}, "grid_m", "config")
        if any(x != int(x) for x in lst):
            raise ConfigError("grid_m entries must be integers")
        if len(lst) != ndim:
            raise ConfigError(f"grid_m must have one entry per axis ({ndim})")
        cfg["grid_m"] = [int(x) for x in lst]
    cfg["params"] = _resolve_params(raw["params"])
    cfg["nonlinearity"] = _resolve_nonlinearity(raw["nonlinearity"])
    cfg["initial_data"] = _resolve_initial_data(raw["initial_data"], cfg["n_modes"])
    cfg["integrator"] = _resolve_integrator(raw["integrator"])
    cfg["monitors"] = _resolve_monitors(raw.get("monitors", {}))
    cfg["output"] = _resolve_output(raw.get("output", {}))
    cfg["seed"] = _integer({"seed": raw.get("seed", 0)}, "seed", "config", minimum=0)
    return cfg


def load_config(path: str) -> dict:
    """Parse and validate a JSON run config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return resolve_config(raw)


def make_nonlinearity(spec: dict):
    if spec["kind"] == "zero":
        return nonlinearity.zero()
    if spec["kind"] == "quadratic":
        return nonlinearity.quadratic(spec["k"])
    return nonlinearity.exponential(spec["k"])


def _preset_coefficients(spec: dict, n: int):
    idx = np.arange(1, n + 1, dtype=float)
    u0 = np.zeros(n)
    u1 = np.zeros(n)
    name = spec["name"]
    amp = spec["amplitude"]
    u1a = spec["u1_amplitude"]
    if name == "first_mode":
        u0[0] = amp
        u1[0] = u1a
    elif name == "flat_spectrum":
        u0[:] = amp / math.sqrt(n)
        u1[0] = u1a
    elif name == "decaying_spectrum":
        u0 = amp / idx**2
        u1 = u1a / idx**2
    return u0, u1, np.zeros(n)


class PreparedRun:
    """Everything needed to execute a run: system, data, integrator config.

    ``echo`` is a fully resolved config (coefficients inlined, backend and
    grid pinned, K0 pinned for certified data) that reproduces the run
    bitwise when fed back through ``prepare_run``.
    """

    def __init__(self, system, state0, int_cfg, monitors_cfg, certificate, echo):
        self.system = system
        self.state0 = state0
        self.int_cfg = int_cfg
        self.monitors = monitors_cfg
        self.certificate = certificate
        self.echo = echo


def prepare_run(cfg: dict) -> PreparedRun:
    """Build the spectral system and initial state described by a config."""
    domain = DomainSpec(tuple(cfg["domain"]["lengths"]))
    grid_m = cfg["grid_m"]
    basis = build_basis(domain, cfg["n_modes"], tuple(grid_m) if grid_m else None)
    params = ModelParams(**cfg["params"])
    nl = make_nonlinearity(cfg["nonlinearity"])
    system = GalerkinSystem(basis, params, nl)

    data = cfg["initial_data"]
    certificate = None
    if data["mode"] == "coefficients":
        u0 = np.asarray(data["u0"], dtype=float)
        u1 = np.asarray(data["u1"], dtype=float)
        u2 = np.asarray(data["u2"], dtype=float)
    elif data["mode"] == "preset":
        u0, u1, u2 = _preset_coefficients(data, system.n)
    else:
        certificate = make_certified_data(
            system, data["T0"], data["margin"], xi0=data["xi0"], method=data["method"]
        )
        u0, u1, u2 = certificate.u0, certificate.u1, certificate.u2
    state0 = system.init_state(u0, u1, u2)

    icfg = cfg["integrator"]
    int_cfg = IntegratorConfig(
        t_end=icfg["t_end"],
        rel_tol=icfg["rel_tol"],
        abs_tol=icfg["abs_tol"],
        dt_init=icfg["dt_init"],
        dt_min=icfg["dt_min"],
        dt_max=icfg["dt_max"],
        u_max=icfg["u_max"],
        sample_dt=icfg["sample_dt"],
        max_steps=icfg["max_steps"],
        backend=icfg["backend"],
        fixed_dt=icfg["fixed_dt"],
    )

    monitors_cfg = dict(cfg["monitors"])
    if monitors_cfg["K0"] is None and certificate is not None:
        monitors_cfg["K0"] = certificate.K0

    _, resolved_backend = make_stepper(system, icfg["backend"])
    echo = json.loads(json.dumps(cfg))
    echo["grid_m"] = [int(m) for m in basis.M]
    echo["initial_data"] = {
        "mode": "coefficients",
        "u0": [float(v) for v in state0.a],
        "u1": [float(v) for v in state0.b],
        "u2": [float(v) for v in state0.c],
    }
    echo["integrator"]["backend"] = resolved_backend
    echo["monitors"]["K0"] = monitors_cfg["K0"]
    return PreparedRun(system, state0, int_cfg, monitors_cfg, certificate, echo)
