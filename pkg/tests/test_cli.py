import json
import subprocess
import sys

import numpy as np
import pytest

from fkwave import acceptance
from fkwave.cli import SCHEMA_VERSION, run


def report(out):
    return json.loads((out / "report.json").read_text())


def test_solve_main_run(tmp_path):
    assert run(["solve", "--c2", "0.9", "--eps", "0.01", "--out", str(tmp_path)]) == 0
    rep = report(tmp_path)
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["status"] == "ok"
    assert rep["result"]["wave"]["residual_l2"] <= 1e-8
    used = rep["config"]["defaults_used"]
    assert "gamma" in used and "c2" not in used and "eps" not in used
    header = (tmp_path / "fields.csv").open().readline().strip()
    assert header == "x,u,u_p,r,residual"
    assert (tmp_path / "solve.svg").exists()


def test_stage1_reports_amplitude_flags(tmp_path):
    assert run(["stage1", "--c2", "0.95", "--out", str(tmp_path), "--no-plots"]) == 0
    s1 = report(tmp_path)["result"]["stage1"]
    assert s1["amp_bound_r"] == 0.257 and s1["amp_r_ok"] is True
    assert s1["amp_sup_r"] <= 0.257


@pytest.mark.parametrize("argv", [["solve", "--c2", "0.5"], ["solve", "--omega", "1.5"], ["solve", "--X", "63"],
                                  ["two-trans", "--x0", "7"], ["solve", "--eps", "0.5"]])
def test_invalid_configuration_exits_2(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path), "--no-plots"]) == 2
    rep = report(tmp_path)
    assert rep["status"] == "invalid-config"
    assert rep["error"]["name"] == "InvalidParams"


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        run(["solve", "--c2", "not-a-number"])
    assert exc.value.code == 2


def test_solver_error_exits_1(tmp_path):
    # the domain is too short for a transition this far out
    assert run(["two-trans", "--x0", "12", "--X", "16", "--m", "64", "--out", str(tmp_path), "--no-plots"]) == 1
    rep = report(tmp_path)
    assert rep["status"] == "error" and rep["error"]["name"] == "DomainTooSmall"


def test_report_is_deterministic(tmp_path):
    argv = ["two-trans", "--x0", "8", "--out", str(tmp_path), "--no-plots"]
    assert run(argv) == 0
    first = (tmp_path / "report.json").read_bytes()
    assert run(argv) == 0
    assert (tmp_path / "report.json").read_bytes() == first
    assert "total_seconds" in json.loads((tmp_path / "timing.json").read_text())


def test_svg_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["dispersion", "--points", "5", "--out", str(out)]) == 0
    assert (a / "dispersion.svg").read_bytes() == (b / "dispersion.svg").read_bytes()


def test_dispersion_table(tmp_path):
    assert run(["dispersion", "--points", "6", "--out", str(tmp_path), "--no-plots"]) == 0
    rows = report(tmp_path)["result"]["table"]
    assert len(rows) == 6 and all(r["certified"] for r in rows)
    assert all(abs(r["D(k0)"]) <= 1e-12 for r in rows)


def test_validate_writes_trajectory(tmp_path):
    assert run(["validate", "--T", "2", "--out", str(tmp_path), "--no-plots"]) == 0
    data = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
    assert data.shape[1] == 3 and data[-1, 0] == pytest.approx(2.0)
    assert report(tmp_path)["result"]["max_error"] <= 1e-3


def test_sweep_over_epsilon_respects_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("FKWAVE_THREADS", "2")
    assert run(["sweep", "--over", "eps", "--values", "0.04", "0.02", "0.01", "--out", str(tmp_path)]) == 0
    res = report(tmp_path)["result"]
    assert [r["eps"] for r in res["rows"]] == [0.04, 0.02, 0.01]
    assert 1.6 <= res["beta_loglog_slope"] <= 2.4
    assert (tmp_path / "sweep.csv").exists()


def test_sweep_over_x0(tmp_path):
    assert run(["sweep", "--over", "x0", "--values", "8", "10", "--out", str(tmp_path)]) == 0
    rows = report(tmp_path)["result"]["rows"]
    assert all(r["sign_changes"] == 2 for r in rows)


def test_sweep_reports_failed_points(tmp_path):
    assert run(["sweep", "--over", "x0", "--values", "8", "9", "--out", str(tmp_path)]) == 1
    rows = report(tmp_path)["result"]["rows"]
    assert rows[0]["error"] is None and rows[1]["error"] == "InvalidParams"


def test_bad_thread_setting(tmp_path, monkeypatch):
    monkeypatch.setenv("FKWAVE_THREADS", "many")
    assert run(["sweep", "--over", "eps", "--values", "0.02", "--out", str(tmp_path)]) == 2


def test_check_targets_by_number_and_name(tmp_path, capsys):
    assert run(["check", "1", "orthogonality-constants", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("PASS dispersion-identities")
    assert lines[1].startswith("PASS orthogonality-constants")
    assert [c["name"] for c in report(tmp_path)["result"]["checks"]] == ["dispersion-identities",
                                                                         "orthogonality-constants"]


def test_every_acceptance_criterion_is_a_named_target():
    assert sorted(acceptance.CHECK_NAMES.values()) == list(range(1, 10))


def test_unknown_check_target(tmp_path):
    assert run(["check", "bogus", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "fkwave", "check", "1", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "PASS dispersion-identities" in out.stdout
