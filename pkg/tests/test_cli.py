"""End-to-end command-line contract.

Exit codes are part of the interface: 0 for completed runs including a
cleanly detected blow-up, 2 for config errors, 3 for numerical failures,
4 for verification failures.  The echoed config in report.json must
reproduce run.csv byte for byte when fed back in.
"""

import json
import math
import os

import pytest

from jmgtlab import cli
from jmgtlab.reporting import OUTPUT_ROOT_ENV


def _base_cfg(**over):
    cfg = {
        "domain": {"lengths": [math.pi]},
        "n_modes": 3,
        "params": {"tau": 1.0, "alpha": 1.0, "beta": 1.0, "gamma": 1.0},
        "nonlinearity": {"kind": "quadratic", "k": 1.0},
        "initial_data": {
            "mode": "preset",
            "name": "decaying_spectrum",
            "amplitude": 0.05,
        },
        "integrator": {"t_end": 0.3, "sample_dt": 0.1},
        "output": {"dir": "art", "plots": []},
    }
    for key, val in over.items():
        # initial_data modes have disjoint key sets: replace, never merge
        if key != "initial_data" and isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    return cfg


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    return tmp_path


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


# -- usage and config errors ----------------------------------------------------


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert "jmgtlab" in capsys.readouterr().out


def test_missing_config_exits_2(workdir, capsys):
    assert cli.main(["simulate", "--config", str(workdir / "nope.json")]) == 2
    assert "config error" in capsys.readouterr().err


def test_invalid_json_exits_2(workdir, capsys):
    path = workdir / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    assert cli.main(["simulate", "--config", str(path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_unknown_key_exits_2(workdir, capsys):
    cfg = _base_cfg()
    cfg["integrator"]["rel_tols"] = 1e-8  # typo must not silently default
    assert cli.main(["simulate", "--config", _write_cfg(workdir, cfg)]) == 2
    assert "rel_tols" in capsys.readouterr().err


def test_unknown_verify_suite_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "no-such-suite"])
    assert exc.value.code == 2


# -- simulate --------------------------------------------------------------------


def test_simulate_writes_artifacts(workdir, capsys):
    cfg = _base_cfg(output={"dir": "sim1", "plots": ["u_linf", "F_N"]})
    assert cli.main(["simulate", "--config", _write_cfg(workdir, cfg)]) == 0
    out = capsys.readouterr().out
    assert "reached_t_end" in out and "artifacts=" in out

    outdir = workdir / "sim1"
    assert (outdir / "run.csv").is_file()
    assert (outdir / "plot_u_linf.svg").is_file()
    assert (outdir / "plot_F_N.svg").is_file()
    report = json.loads((outdir / "report.json").read_text())
    assert report["schema"]["csv_version"] == 1
    assert report["schema"]["columns"][0] == "t"
    assert report["outcome"]["status"] == "reached_t_end"
    assert report["summary"]["min_F_N_gap"] >= 0.0
    assert report["resolved"]["backend"] in ("compiled", "python")
    assert report["config"]["initial_data"]["mode"] == "coefficients"
    assert len(report["config"]["initial_data"]["u0"]) == 3
    assert "assumptions" not in report

    header = (outdir / "run.csv").read_text().splitlines()[0]
    assert header == ",".join(report["schema"]["columns"])


def test_simulate_echo_reproduces_run_bitwise(workdir):
    cfg = _base_cfg(output={"dir": "orig", "plots": []})
    assert cli.main(["simulate", "--config", _write_cfg(workdir, cfg)]) == 0
    report = json.loads((workdir / "orig" / "report.json").read_text())
    echo = report["config"]
    echo["output"]["dir"] = "rerun"
    assert cli.main(["simulate", "--config", _write_cfg(workdir, echo, "echo.json")]) == 0
    orig = (workdir / "orig" / "run.csv").read_bytes()
    rerun = (workdir / "rerun" / "run.csv").read_bytes()
    assert orig == rerun


def test_simulate_numerical_failure_exits_3(workdir, capsys):
    # pinned step with an unreachable tolerance forces a step underflow
    cfg = _base_cfg(
        integrator={
            "t_end": 1.0,
            "rel_tol": 1e-13,
            "dt_init": 0.25,
            "dt_min": 0.25,
            "dt_max": 0.25,
        },
        initial_data={"mode": "preset", "name": "decaying_spectrum", "amplitude": 0.5},
        output={"dir": "fail", "plots": []},
    )
    assert cli.main(["simulate", "--config", _write_cfg(workdir, cfg)]) == 3
    captured = capsys.readouterr()
    assert "numerical failure" in captured.err
    report = json.loads((workdir / "fail" / "report.json").read_text())
    assert report["outcome"]["status"] == "step_underflow"


def test_simulate_blow_up_is_exit_0(workdir, capsys):
    cfg = _base_cfg(
        initial_data={
            "mode": "coefficients",
            "u0": [8.0, 0.0, 0.0],
            "u1": [8.0, 0.0, 0.0],
            "u2": [0.0, 0.0, 0.0],
        },
        integrator={"t_end": 5.0, "u_max": 1e4, "sample_dt": 0.05},
        output={"dir": "bu", "plots": []},
    )
    assert cli.main(["simulate", "--config", _write_cfg(workdir, cfg)]) == 0
    assert "bracket=[" in capsys.readouterr().out
    report = json.loads((workdir / "bu" / "report.json").read_text())
    assert report["outcome"]["status"] == "blow_up_detected"
    lo, hi = report["outcome"]["blow_up"]
    assert 0.0 < lo <= hi < 5.0
    assert any("monotonically" in a for a in report["assumptions"])


# -- certify ---------------------------------------------------------------------


def _certified_cfg(**over):
    return _base_cfg(
        initial_data={"mode": "certified", "T0": 1.0, "margin": 0.01},
        integrator={"t_end": 1.0, "u_max": 1e5, "sample_dt": 0.01},
        **over,
    )


def test_certify_writes_certificate(workdir, capsys):
    cfg = _certified_cfg(output={"dir": "cert", "plots": []})
    assert cli.main(["certify", "--config", _write_cfg(workdir, cfg)]) == 0
    out = capsys.readouterr().out
    assert "certificate ok=True" in out
    cert = json.loads((workdir / "cert" / "certificate.json").read_text())
    assert cert["validation"]["ok"] is True
    assert cert["K0"] > 0 and cert["K1"] > 0 and cert["K2"] > 0
    assert cert["comparison_blow_time"] <= cert["T0"]
    assert not (workdir / "cert" / "run.csv").exists()  # no --run


def test_certify_run_chains_into_blow_up(workdir, capsys):
    cfg = _certified_cfg(output={"dir": "certrun", "plots": []})
    assert cli.main(["certify", "--config", _write_cfg(workdir, cfg), "--run"]) == 0
    assert "blow_up_detected" in capsys.readouterr().out
    report = json.loads((workdir / "certrun" / "report.json").read_text())
    assert report["outcome"]["blow_up"][1] <= 1.0  # within the certified horizon
    assert report["config"]["monitors"]["K0"] is not None  # pinned for replay
    assert report["summary"]["min_odi_slack"] is not None
    assert report["summary"]["odi_finding"] is False


def test_certify_refuses_zero_nonlinearity(workdir, capsys):
    cfg = _certified_cfg(nonlinearity={"kind": "zero"}, output={"dir": "ref", "plots": []})
    del cfg["nonlinearity"]["k"]
    assert cli.main(["certify", "--config", _write_cfg(workdir, cfg)]) == 2
    assert "refused" in capsys.readouterr().err
    cert = json.loads((workdir / "ref" / "certificate.json").read_text())
    assert cert["refused"] is True
    assert "hypotheses" in cert["reason"]


def test_certify_requires_certified_mode(workdir, capsys):
    cfg = _base_cfg(output={"dir": "x", "plots": []})
    assert cli.main(["certify", "--config", _write_cfg(workdir, cfg)]) == 2
    assert "certified" in capsys.readouterr().err


# -- verify ----------------------------------------------------------------------


def test_verify_single_suite_passes(capsys):
    assert cli.main(["verify", "csv-schema"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "csv-schema" in out and "1 suites passed" in out


# -- sweep -----------------------------------------------------------------------


def test_sweep_serial_grid(workdir, capsys):
    sweep = {
        "base": _base_cfg(output={"dir": "unused", "plots": []}),
        "sweep": {"params.alpha": [0.5, 2.0]},
        "output": {"dir": "swp"},
    }
    assert cli.main(["sweep", "--config", _write_cfg(workdir, sweep, "sweep.json")]) == 0
    assert "2 runs, 0 failures" in capsys.readouterr().out
    lines = (workdir / "swp" / "summary.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[:2] == ["run_id", "params.alpha"]
    assert "status" in header and "regime" in header
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    assert [r["params.alpha"] for r in rows] == ["0.5", "2.0"]
    assert all(r["status"] == "reached_t_end" for r in rows)
    assert rows[0]["regime"] == "unstable" and rows[1]["regime"] == "stable"
    for run_id in ("run_0000", "run_0001"):
        assert (workdir / "swp" / run_id / "run.csv").is_file()


def test_sweep_bad_path_exits_2(workdir, capsys):
    sweep = {
        "base": _base_cfg(),
        "sweep": {"params.delta": [1.0]},
        "output": {"dir": "swp2"},
    }
    assert cli.main(["sweep", "--config", _write_cfg(workdir, sweep, "sweep.json")]) == 2
    assert "params.delta" in capsys.readouterr().err


def test_sweep_marks_failed_cases_exit_3(workdir, capsys):
    sweep = {
        "base": _base_cfg(output={"dir": "unused", "plots": []}),
        "sweep": {"params.tau": [1.0, -1.0]},  # negative tau fails validation
        "output": {"dir": "swp3"},
    }
    assert cli.main(["sweep", "--config", _write_cfg(workdir, sweep, "sweep.json")]) == 3
    assert "1 failures" in capsys.readouterr().out
    lines = (workdir / "swp3" / "summary.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    by_tau = {r["params.tau"]: r for r in rows}
    assert by_tau["1.0"]["status"] == "reached_t_end"
    assert by_tau["-1.0"]["status"] == "error"
    assert "tau" in by_tau["-1.0"]["error"]


def test_output_root_env_scopes_relative_dirs(workdir):
    cfg = _base_cfg(output={"dir": "scoped/deep", "plots": []})
    assert cli.main(["simulate", "--config", _write_cfg(workdir, cfg)]) == 0
    assert (workdir / "scoped" / "deep" / "run.csv").is_file()
    assert not os.path.exists("scoped")
