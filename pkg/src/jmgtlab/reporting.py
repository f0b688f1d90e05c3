"""Run artifacts: CSV time series, JSON reports, and SVG line plots.

All files are UTF-8 with LF line endings.  Floats are written with
shortest round-trip formatting, so parsing the CSV back gives the exact
doubles the monitors produced.  The output root can be redirected with
the JMGTLAB_OUTPUT_ROOT environment variable (relative output dirs are
created under it).
"""

import dataclasses
import enum
import json
import math
import os

import numpy as np

OUTPUT_ROOT_ENV = "JMGTLAB_OUTPUT_ROOT"


def resolve_output_dir(path: str) -> str:
    """Absolute output directory, honoring the output-root override."""
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(path):
        path = os.path.join(root, path)
    return os.path.abspath(path)


def format_float(v: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    return repr(float(v))


def to_jsonable(obj):
    """Recursively convert dataclasses, numpy types, and enums for JSON."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else format_float(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return to_jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_jsonable(payload), fh, indent=2)
        fh.write("\n")


def write_csv(path: str, report) -> None:
    """Write a monitor report's rows under its column header."""
    lines = [",".join(report.columns)]
    for row in report.rows:
        lines.append(",".join(format_float(row[c]) for c in report.columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str):
    """Parse a run.csv back into (columns, rows of floats)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    columns = tuple(lines[0].split(","))
    rows = [dict(zip(columns, map(float, ln.split(",")))) for ln in lines[1:]]
    return columns, rows


def write_plots(outdir: str, report, columns) -> list:
    """One SVG line plot per selected column; returns written paths."""
    if not columns:
        return []
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # deterministic SVG output: fixed hash salt, no embedded date
    matplotlib.rcParams["svg.hashsalt"] = "jmgtlab"
    t = [row["t"] for row in report.rows]
    written = []
    for col in columns:
        vals = [row[col] for row in report.rows]
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        ax.plot(t, vals, lw=1.2)
        ax.set_xlabel("t")
        ax.set_ylabel(col)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = os.path.join(outdir, f"plot_{col}.svg")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def outcome_payload(outcome) -> dict:
    return {
        "status": outcome.status.value,
        "t_final": outcome.t_final,
        "blow_up": list(outcome.blow_up) if outcome.blow_up else None,
        "stats": to_jsonable(outcome.stats),
    }


def certificate_payload(cert, validation=None) -> dict:
    payload = to_jsonable(cert)
    if validation is not None:
        payload["validation"] = to_jsonable(validation)
    return payload
