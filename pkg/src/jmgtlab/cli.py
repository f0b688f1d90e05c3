"""Command-line entry points: simulate, certify, verify, sweep.

Exit codes: 0 completed (a cleanly detected blow-up is a completed run),
2 config or usage error, 3 numerical failure (step underflow or
non-finite state), 4 verification failure.
"""

import argparse
import csv
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .acceptance import SUITES, run_suites
from .certificate import validate_certificate
from .config import ConfigError, load_config, prepare_run, resolve_config
from .integrator import Status, integrate
from .monitors import CSV_COLUMNS, CSV_SCHEMA_VERSION, DEFAULT_TOGGLES, build_report
from .reporting import (
    certificate_payload,
    format_float,
    outcome_payload,
    resolve_output_dir,
    write_csv,
    write_json,
    write_plots,
)

_BRACKET_ASSUMPTION = (
    "blow-up bracket refinement assumes the sup norm grows monotonically "
    "across the last accepted step"
)


class RunArtifacts:
    def __init__(self, outdir, prep, outcome, report, validation):
        self.outdir = outdir
        self.prep = prep
        self.outcome = outcome
        self.report = report
        self.validation = validation


def execute_run(cfg: dict) -> RunArtifacts:
    """Run a resolved config and write every artifact to its output dir."""
    prep = prepare_run(cfg)
    outdir = resolve_output_dir(cfg["output"]["dir"])
    os.makedirs(outdir, exist_ok=True)

    sources = prep.system.lifted_sources(prep.state0)
    outcome = integrate(prep.system, prep.state0, prep.int_cfg)
    toggles = {k: prep.monitors[k] for k in DEFAULT_TOGGLES}
    report = build_report(
        outcome,
        prep.system,
        sources,
        K0=prep.monitors["K0"],
        xi0=prep.monitors["xi0"],
        toggles=toggles,
    )

    validation = None
    if prep.certificate is not None:
        validation = validate_certificate(prep.certificate, prep.system)
        write_json(
            os.path.join(outdir, "certificate.json"),
            certificate_payload(prep.certificate, validation),
        )

    write_csv(os.path.join(outdir, "run.csv"), report)
    payload = {
        "package_version": __version__,
        "schema": {"csv_version": CSV_SCHEMA_VERSION, "columns": list(CSV_COLUMNS)},
        "config": prep.echo,
        "outcome": outcome_payload(outcome),
        "summary": report.summary,
        "resolved": {
            "backend": outcome.stats.get("backend"),
            "kappa": prep.system.basis.kappa,
            "lambda1": prep.system.basis.lambda1,
            "eigenvalues": prep.system.lam,
            "mode_indices": prep.system.basis.mode_indices,
        },
    }
    if outcome.blow_up is not None:
        payload["assumptions"] = [_BRACKET_ASSUMPTION]
    write_json(os.path.join(outdir, "report.json"), payload)
    write_plots(outdir, report, cfg["output"]["plots"])
    return RunArtifacts(outdir, prep, outcome, report, validation)


def _status_exit(outcome) -> int:
    if outcome.status in (Status.REACHED_T_END, Status.BLOW_UP_DETECTED):
        return 0
    return 3


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    art = execute_run(cfg)
    out = art.outcome
    line = f"{out.status.value} t_final={format_float(out.t_final)}"
    if out.blow_up:
        lo, hi = out.blow_up
        line += f" bracket=[{format_float(lo)}, {format_float(hi)}]"
    print(f"{line} artifacts={art.outdir}")
    code = _status_exit(out)
    if code != 0:
        print(
            f"numerical failure: {out.status.value} at t={out.t_final!r} "
            f"(dt_last={out.stats.get('dt_last')!r}); see {art.outdir}/report.json",
            file=sys.stderr,
        )
    return code


def cmd_certify(args) -> int:
    cfg = load_config(args.config)
    if cfg["initial_data"]["mode"] != "certified":
        raise ConfigError("certify requires initial_data.mode == 'certified'")
    outdir = resolve_output_dir(cfg["output"]["dir"])
    os.makedirs(outdir, exist_ok=True)
    try:
        prep = prepare_run(cfg)
    except ValueError as exc:
        refusal = {"refused": True, "reason": str(exc)}
        write_json(os.path.join(outdir, "certificate.json"), refusal)
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    validation = validate_certificate(prep.certificate, prep.system)
    write_json(
        os.path.join(outdir, "certificate.json"),
        certificate_payload(prep.certificate, validation),
    )
    cert = prep.certificate
    print(
        f"certificate ok={validation['ok']} K0={format_float(cert.K0)} "
        f"K1={format_float(cert.K1)} K2={format_float(cert.K2)} "
        f"comparison_blow_time={format_float(cert.comparison_blow_time)}"
    )
    if not args.run:
        return 0
    art = execute_run(cfg)
    out = art.outcome
    line = f"{out.status.value} t_final={format_float(out.t_final)}"
    if out.blow_up:
        lo, hi = out.blow_up
        line += f" bracket=[{format_float(lo)}, {format_float(hi)}]"
    print(f"{line} artifacts={art.outdir}")
    return _status_exit(out)


def cmd_verify(args) -> int:
    results = run_suites(args.suites, seed=args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  {r.elapsed:7.2f} s  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} suites failed: {', '.join(failed)}")
        return 4
    print(f"all {len(results)} suites passed")
    return 0


# -- sweep ---------------------------------------------------------------------

_SWEEP_COLUMNS_FIXED = (
    "status",
    "t_final",
    "blow_t_lo",
    "blow_t_hi",
    "max_u_linf",
    "regime",
    "K0",
    "K1",
    "K2",
    "error",
)


def _set_dotted(cfg: dict, path: str, value) -> None:
    keys = path.split(".")
    node = cfg
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"sweep path {path!r} not present in base config")
        node = node[key]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep path {path!r} not present in base config")
    node[keys[-1]] = value


def load_sweep_config(path: str) -> tuple:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("sweep config must be a JSON object")
    unknown = set(raw) - {"base", "sweep", "workers", "output"}
    if unknown:
        raise ConfigError(f"unknown keys in sweep config: {sorted(unknown)}")
    for key in ("base", "sweep", "output"):
        if key not in raw:
            raise ConfigError(f"sweep config requires {key!r}")
    base = resolve_config(raw["base"])
    sweep = raw["sweep"]
    if not isinstance(sweep, dict) or not all(isinstance(v, list) for v in sweep.values()):
        raise ConfigError("sweep must map dotted config paths to value lists")
    for key in sweep:
        _set_dotted(json.loads(json.dumps(base)), key, None)  # path check only
    out = raw["output"]
    if not isinstance(out, dict) or not isinstance(out.get("dir"), str) or not out["dir"]:
        raise ConfigError("sweep output.dir must be a non-empty string")
    workers = raw.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers must be a positive integer")
    return base, sweep, out["dir"], workers


def _sweep_case(task):
    run_id, cfg_raw, values = task
    row = {"run_id": run_id, **values}
    try:
        cfg = resolve_config(cfg_raw)
        art = execute_run(cfg)
        out = art.outcome
        row["status"] = out.status.value
        row["t_final"] = out.t_final
        if out.blow_up:
            row["blow_t_lo"], row["blow_t_hi"] = out.blow_up
        row["max_u_linf"] = max((r["u_linf"] for r in art.report.rows), default=math.nan)
        row["regime"] = art.prep.system.params.regime()
        if art.prep.certificate is not None:
            cert = art.prep.certificate
            row["K0"], row["K1"], row["K2"] = cert.K0, cert.K1, cert.K2
    except Exception as exc:  # partial failures become marked rows
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args) -> int:
    base, sweep, outdir, workers = load_sweep_config(args.config)
    outdir = resolve_output_dir(outdir)
    os.makedirs(outdir, exist_ok=True)
    keys = sorted(sweep)
    tasks = []
    for run_id, combo in enumerate(itertools.product(*(sweep[k] for k in keys))):
        cfg_raw = json.loads(json.dumps(base))
        for key, value in zip(keys, combo):
            _set_dotted(cfg_raw, key, value)
        cfg_raw["output"]["dir"] = os.path.join(outdir, f"run_{run_id:04d}")
        tasks.append((run_id, cfg_raw, dict(zip(keys, combo))))

    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_case, tasks))
    else:
        rows = [_sweep_case(t) for t in tasks]

    columns = ["run_id", *keys, *_SWEEP_COLUMNS_FIXED]
    summary_path = os.path.join(outdir, "summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            formatted = {}
            for key, value in row.items():
                if isinstance(value, float):
                    formatted[key] = format_float(value)
                else:
                    formatted[key] = value
            writer.writerow(formatted)

    n_bad = sum(
        1
        for row in rows
        if row.get("status") in ("error", Status.STEP_UNDERFLOW.value, Status.NON_FINITE.value)
    )
    print(f"{len(rows)} runs, {n_bad} failures, summary={summary_path}")
    return 3 if n_bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jmgtlab",
        description="Spectral Galerkin lab for a third-order-in-time "
        "nonlinear acoustics model: simulation, energy monitoring, and "
        "blow-up certification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one config and write artifacts")
    p_sim.add_argument("--config", required=True, help="path to a JSON run config")
    p_sim.set_defaults(fn=cmd_simulate)

    p_cert = sub.add_parser("certify", help="build and validate a blow-up certificate")
    p_cert.add_argument("--config", required=True, help="config with certified initial data")
    p_cert.add_argument("--run", action="store_true", help="also run the certified data")
    p_cert.set_defaults(fn=cmd_certify)

    p_ver = sub.add_parser("verify", help="run acceptance suites")
    p_ver.add_argument(
        "suites",
        nargs="+",
        choices=["all", *SUITES],
        metavar="suite",
        help=f"one or more of: all, {', '.join(SUITES)}",
    )
    p_ver.add_argument("--seed", type=int, default=0, help="seed for randomized suites")
    p_ver.set_defaults(fn=cmd_verify)

    p_swp = sub.add_parser("sweep", help="run a Cartesian parameter grid")
    p_swp.add_argument("--config", required=True, help="path to a JSON sweep config")
    p_swp.set_defaults(fn=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
