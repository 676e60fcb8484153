import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from orbitfix.cli import SUMMARY_SCHEMA, main

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None


def _read_summary(out):
    return json.loads((out / "summary.json").read_text())


def _read_trace(out):
    with open(out / "trace.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def _validate(summary):
    if jsonschema is not None:
        jsonschema.validate(summary, SUMMARY_SCHEMA)


BS_SMALL = ["--grid-n", "256", "--half-length", "25"]


# ---------------- usage errors ----------------

def test_no_arguments_is_usage_error():
    assert main([]) == 1


def test_unknown_subcommand_is_usage_error():
    assert main(["nbody", "propagate"]) == 1


def test_bad_perturbation_kind_is_usage_error(tmp_path):
    assert main(["nbody", "solve", "--perturb", "gauss",
                 "--out", str(tmp_path)]) == 1


def test_bad_theta2_is_usage_error(tmp_path):
    assert main(["bs", "solve", "--theta2", "0.5", "--out", str(tmp_path)]) == 1


def test_bs_rejects_non_newton_method(tmp_path):
    assert main(["bs", "solve", "--method", "petviashvili", *BS_SMALL,
                 "--out", str(tmp_path)]) == 1


# ---------------- nbody ----------------

def test_nbody_solve_success(tmp_path):
    code = main(["nbody", "solve", "--m0", "5", "--perturb", "ones", "--eps", "0.1",
                 "--tol", "1e-10", "--out", str(tmp_path)])
    assert code == 0

    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["status"] == "ConvergedResidual"
    assert summary["final_residual"] <= 1e-10
    assert summary["exit_code"] == 0
    assert summary["orbit"]["orbital_distance"] <= 1e-8

    rows = _read_trace(tmp_path)
    assert len(rows) == summary["iterations"] + 1
    terminal_s = float(rows[-1]["stab_factor"])
    assert abs(1.0 - terminal_s) <= 1e-8

    bodies = list(csv.DictReader(open(tmp_path / "bodies.csv", newline="")))
    assert len(bodies) == 2


def test_nbody_solve_divergent_exit_code(tmp_path):
    code = main(["nbody", "solve", "--m0", "1", "--perturb", "ones", "--eps", "0.1",
                 "--out", str(tmp_path)])
    assert code == 3
    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["status"] == "Diverged"
    assert summary["exit_code"] == 3


def test_nbody_solve_iteration_budget_exit_code(tmp_path):
    code = main(["nbody", "solve", "--m0", "5", "--perturb", "ones", "--eps", "0.1",
                 "--tol", "1e-10", "--max-outer", "3", "--out", str(tmp_path)])
    assert code == 2
    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["status"] == "MaxIterations"
    assert summary["iterations"] == 3


def test_nbody_spectrum_closed_form(tmp_path):
    code = main(["nbody", "spectrum", "--m0", "10", "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "spectrum.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    vals = sorted(float(r["re"]) for r in rows)
    assert np.allclose(vals, sorted([-2.0, 1.0, -8.0 / 14.0, 4.0 / 14.0]), atol=1e-9)
    assert all(abs(float(r["im"])) < 1e-10 for r in rows)

    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["extras"]["count_near_unit"] == 1
    assert abs(summary["extras"]["dominant_modulus"] - 2.0) < 1e-9


def test_nbody_spectrum_stabilized_filters_dominant(tmp_path):
    code = main(["nbody", "spectrum", "--m0", "10", "--map", "stabilized",
                 "--out", str(tmp_path)])
    assert code == 0
    summary = _read_summary(tmp_path)
    assert summary["extras"]["dominant_modulus"] < 1.0 + 1e-6


def test_nbody_orbit_generator_seed(tmp_path):
    code = main(["nbody", "orbit", "--m0", "10", "--perturb", "generator",
                 "--eps", "1", "--tol", "1e-10", "--out", str(tmp_path)])
    assert code == 0
    summary = _read_summary(tmp_path)
    _validate(summary)
    orbit = summary["orbit"]
    assert orbit["orbital_distance"] <= 1e-6
    assert orbit["raw_distance"] > 1e-2
    assert abs(summary["extras"]["alpha_predicted"] - 1.0) < 1e-10
    assert summary["extras"]["kernel_residual"] <= 1e-6


# ---------------- bs ----------------

def test_bs_solve_even_perturbation(tmp_path):
    code = main(["bs", "solve", *BS_SMALL, "--perturb", "gauss", "--eps", "0.01",
                 "--tol", "1e-8", "--out", str(tmp_path)])
    assert code == 0
    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["status"] == "ConvergedResidual"
    assert summary["final_residual"] <= 1e-8
    # an even perturbation cannot move the wave
    assert abs(summary["extras"]["x_eta"]) <= 1e-6
    assert summary["orbit"]["orbital_distance"] <= 1e-6

    with open(tmp_path / "profile.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 256
    peak = max(float(r["eta"]) for r in rows)
    assert abs(peak - 5.5) < 0.1


def test_bs_shift_table(tmp_path):
    code = main(["bs", "shift-table", *BS_SMALL, "--eps", "0.01",
                 "--tol", "1e-8", "--out", str(tmp_path)])
    assert code == 0
    table = json.loads((tmp_path / "shift_table.json").read_text())
    assert len(table) == 1
    row = table[0]
    assert row["status"] == "ConvergedResidual"
    # derivative-direction seeds translate the wave by about -eps
    assert abs(row["x_eta"] - (-0.01)) < 2e-3
    assert abs(row["x_u"] - row["x_eta"]) < 1e-6


def test_bs_spectrum_single_null_mode(tmp_path):
    code = main(["bs", "spectrum", *BS_SMALL, "--out", str(tmp_path)])
    assert code == 0
    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["extras"]["count_near_zero"] == 1


def test_bs_propagate(tmp_path):
    code = main(["bs", "propagate", *BS_SMALL, "--dt", "0.01", "--t-end", "1",
                 "--out", str(tmp_path)])
    assert code == 0
    summary = _read_summary(tmp_path)
    _validate(summary)
    extras = summary["extras"]
    assert extras["completed"] is True
    assert extras["center_error"] <= 1e-3
    assert extras["shape_error"] <= 1e-3

    with open(tmp_path / "snapshots.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    assert abs(float(rows[-1]["t"]) - 1.0) < 1e-6


def test_bs_propagate_rejects_bad_snapshots(tmp_path):
    assert main(["bs", "propagate", *BS_SMALL, "--snapshots", "a,b",
                 "--out", str(tmp_path)]) == 1


def test_bs_propagate_prescribed_speed_solves_first(tmp_path):
    # the closed-form profile is only a seed here; the run must report a
    # genuine residual solve, not a reference stop at iteration zero
    code = main(["bs", "propagate", *BS_SMALL, "--cs", "1.2", "--tol", "1e-10",
                 "--dt", "0.01", "--t-end", "1", "--out", str(tmp_path)])
    assert code == 0
    summary = _read_summary(tmp_path)
    _validate(summary)
    assert summary["status"] == "ConvergedResidual"
    assert summary["iterations"] > 0
    assert summary["final_residual"] <= 1e-10
    extras = summary["extras"]
    assert extras["completed"] is True
    assert extras["center_error"] <= 1e-3
    assert extras["shape_error"] <= 1e-3


# ---------------- reproducibility ----------------

def test_solver_outputs_are_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    args = ["bs", "solve", *BS_SMALL, "--perturb", "gauss", "--eps", "0.01",
            "--tol", "1e-8"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    assert (a / "profile.csv").read_bytes() == (b / "profile.csv").read_bytes()


# ---------------- console entry point ----------------

def test_console_script(tmp_path):
    exe = shutil.which("orbitfix")
    if exe:
        cmd = [exe]
    else:
        cmd = [sys.executable, "-m", "orbitfix.cli"]
    proc = subprocess.run(cmd + ["nbody", "spectrum", "--m0", "10",
                                 "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "summary.json").exists()
