"""
End-to-end tests for fermat_cli.py, run as a script the way users call it.
"""
import csv
import json
import math
import os
import re
import subprocess
import sys
from pathlib import Path

import pytest

import fermat_cli
from closed_form import Weights
from fermat_cli import RunConfig, format_number, render_json, run
from fermat_config import FermatSettings

# Get the directory of this script
SCRIPT_DIR = Path(__file__).parent.absolute()
CLI = os.path.join(SCRIPT_DIR, "fermat_cli.py")
REPORT_KEYS = {"input", "result", "diagnostics", "version"}


def run_cli(*args, cwd=None):
    cmd = [sys.executable, CLI, *args]
    return subprocess.run(cmd, capture_output=True, cwd=cwd)


def load_report(completed) -> dict:
    assert completed.returncode == 0, completed.stderr.decode()
    return json.loads(completed.stdout)


def error_lines(completed):
    return [line for line in completed.stderr.decode().splitlines() if line.startswith("error=")]


def test_solve_equal_weights():
    report = load_report(run_cli("solve", "--weights", "1,1,1"))
    assert set(report) == REPORT_KEYS
    assert report["version"] == fermat_cli.__version__
    assert report["input"]["weights"] == [1.0, 1.0, 1.0]
    result = report["result"]
    assert result["case_label"] == "interior"
    assert result["point"] == pytest.approx([0.57735] * 3, abs=1e-5)
    assert result["coords"]["phi"] == pytest.approx(math.pi / 4, abs=1e-12)
    assert result["objective"] == pytest.approx(2.86595, abs=1e-5)
    assert result["stationarity_residual"] < 1e-10
    assert report["diagnostics"]["method"] == "closed_form"


def test_solve_absorbed_uses_the_vertex():
    report = load_report(run_cli("solve", "--weights", "1,1,10"))
    assert report["result"]["case_label"] == "absorbed"
    assert report["result"]["vertex"] == 3
    assert report["result"]["point"] == [0.0, 0.0, 1.0]


def test_solve_on_a_custom_triangle_uses_the_oracle():
    tri = "1,0,0,0.8,0.6,0,0.6,0,0.8"
    report = load_report(run_cli("solve", "--weights", "1,1,1", "--triangle", tri))
    assert report["diagnostics"]["method"] == "oracle"
    assert report["result"]["case_label"] == "interior"


def test_classify_boundary_triple():
    report = load_report(run_cli("classify", "--weights", "3,4,5"))
    assert report["result"]["label"] == "absorbed"
    assert report["result"]["vertex"] == 3
    assert abs(report["result"]["margins"][2]) < 1e-12
    assert report["result"]["point"] == [0.0, 0.0, 1.0]
    assert report["result"]["objective"] == pytest.approx(7.0 * math.pi / 2.0, abs=1e-12)


def test_classify_floating_reports_the_point():
    report = load_report(run_cli("classify", "--weights", "1,1,1"))
    result = report["result"]
    assert result["label"] == "floating"
    assert result["vertex"] is None
    assert result["point"] == pytest.approx([1.0 / math.sqrt(3.0)] * 3, abs=1e-14)
    assert result["coords"]["phi"] == pytest.approx(math.pi / 4, abs=1e-12)
    assert result["stationarity_residual"] < 1e-10
    assert report["diagnostics"]["method"] == "closed_form"


def test_minimize_reports_oracle_options():
    report = load_report(run_cli("minimize", "--weights", "4,5,6"))
    assert report["diagnostics"]["options"]["scan_points"] == 20000
    assert report["result"]["point"] == pytest.approx([0.292770, 0.377964, 0.878310], abs=1e-5)


def test_json_numbers_carry_seventeen_digits():
    completed = run_cli("solve", "--weights", "1,1,1")
    assert re.search(rb'"point": \[5\.\d{16}e-01, ', completed.stdout)
    assert format_number(0.1) == "1.0000000000000001e-01"
    assert format_number(3) == "3"
    assert format_number(float("nan")) == "null"


def test_identical_flags_give_identical_bytes(tmp_path):
    first = run_cli("plasticity-invert", "--weights", "1,1,1", "--targets", "1.2,1.2,1.2")
    second = run_cli("plasticity-invert", "--weights", "1,1,1", "--targets", "1.2,1.2,1.2")
    assert first.returncode == second.returncode
    assert first.stdout == second.stdout

    for name in ("a.csv", "b.csv"):
        completed = run_cli("grid", "--weights", "4,5,6", "--resolution", "30", "--format", "csv",
                            "--out", str(tmp_path / name))
        assert completed.returncode == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_grid_csv_contract(tmp_path):
    out = tmp_path / "grid.csv"
    completed = run_cli("grid", "--weights", "4,5,6", "--resolution", "200", "--format", "csv", "--out", str(out))
    assert completed.returncode == 0
    data = out.read_bytes()
    assert b"\r" not in data
    lines = data.decode("utf-8").splitlines()
    assert lines[0] == "omega,phi,objective"
    assert len(lines) == 40001
    with open(out, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert all(len(row) == 3 for row in rows)
    float(rows[1][2])


def test_grid_json_in_degrees():
    report = load_report(run_cli("grid", "--weights", "1,1,1", "--resolution", "4", "--angle-unit", "deg"))
    assert report["result"]["columns"] == ["omega", "phi", "objective"]
    rows = report["result"]["rows"]
    assert len(rows) == 16
    assert rows[0][0] == pytest.approx(-67.5)
    assert rows[1][1] == pytest.approx(90.0)


def test_plasticity_generate():
    report = load_report(run_cli("plasticity-generate", "--weights", "4,5,6", "--offsets", "0.1,0.2,0.15"))
    result = report["result"]
    assert result["offsets"] == pytest.approx([0.1, 0.2, 0.15], abs=1e-15)
    assert result["predicted_sides"] == pytest.approx(result["measured_sides"], abs=1e-12)
    assert max(abs(r) for r in result["equation_residuals"]) < 1e-10
    assert report["diagnostics"]["center_shift"] < 1e-5


def test_plasticity_invert_in_degrees():
    report = load_report(run_cli("plasticity-invert", "--weights", "1,1,1", "--targets", "60,60,60",
                                 "--angle-unit", "deg"))
    expected = math.degrees(math.acos(1.0 / math.sqrt(3.0)) - math.acos(math.sqrt(2.0 / 3.0)))
    assert report["result"]["newton"]["offsets"] == pytest.approx([expected] * 3, abs=1e-6)
    assert any(
        s["offsets"] == pytest.approx([expected] * 3, abs=1e-6) for s in report["result"]["weierstrass"]
    )
    assert report["diagnostics"]["newton_to_nearest_weierstrass"] < 1e-5


def test_plasticity_invert_single_solver():
    report = load_report(run_cli("plasticity-invert", "--weights", "1,1,1", "--targets", "1.2,1.2,1.2",
                                 "--solver", "newton"))
    assert "newton" in report["result"]
    assert "weierstrass" not in report["result"]


def test_compare_omega(tmp_path):
    report = load_report(run_cli("compare-omega", "--weights", "4,5,6"))
    result = report["result"]
    assert result["status"] == "ok"
    assert result["omega_published"] == pytest.approx(math.acos(math.sqrt(16.0 / 105.0)), abs=1e-12)
    assert abs(result["omega_closed_form"] - result["omega_oracle"]) < 1e-5

    out = tmp_path / "omega.csv"
    completed = run_cli("compare-omega", "--weights", "4,5,6", "--format", "csv", "--out", str(out))
    assert completed.returncode == 0
    assert out.read_text(encoding="utf-8").startswith("w1,w2,w3,")


@pytest.mark.parametrize(
    "args",
    [
        ("solve", "--weights", "1,-1,1"),
        ("solve", "--weights", "1,1"),
        ("solve", "--weights", "1,1,1", "--triangle", "1,0,0,1,0,0,0,0,1"),
        ("classify", "--weights", "1,1,1", "--format", "csv"),
        ("grid", "--weights", "1,1,1", "--resolution", "x"),
        ("plasticity-generate", "--weights", "4,5,6", "--offsets", "2,0.1,0.1"),
        ("plasticity-generate", "--weights", "1,1,10", "--offsets", "0.1,0.1,0.1"),
        ("teleport", "--weights", "1,1,1"),
    ],
)
def test_validation_errors_exit_two(args):
    completed = run_cli(*args)
    assert completed.returncode == 2
    lines = error_lines(completed)
    assert len(lines) == 1
    assert completed.stderr.decode().strip().splitlines()[-1] == lines[0]
    assert " message=" in lines[0]


def test_no_real_solution_exits_three():
    completed = run_cli("plasticity-invert", "--weights", "1,1,1", "--targets", "0.1,1.5,0.1",
                        "--solver", "weierstrass")
    assert completed.returncode == 3
    assert error_lines(completed)[0].startswith("error=NoRealSolution message=")
    report = json.loads(completed.stdout)
    assert report["result"] is None
    assert report["diagnostics"]["error_type"] == "NoRealSolution"
    assert len(report["diagnostics"]["branches"]) == 4


def test_run_in_process():
    config = RunConfig(command="classify", weights=Weights.of((1, 1, 1)))
    outcome = run(config, FermatSettings())
    assert outcome.exit_code == 0
    assert outcome.error is None
    report = json.loads(outcome.report)
    assert report["result"]["label"] == "floating"
    assert report["input"]["triangle"] == [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def test_run_config_requires_command_inputs():
    with pytest.raises(ValueError):
        RunConfig(command="plasticity-invert", weights=Weights.of((1, 1, 1)))


def test_render_json_layout():
    text = render_json({"a": [1.0, 2], "b": {"c": None, "d": "x"}, "e": []})
    assert json.loads(text) == {"a": [1.0, 2], "b": {"c": None, "d": "x"}, "e": []}
    assert text.splitlines()[1] == '  "a": [1.0000000000000000e+00, 2],'
