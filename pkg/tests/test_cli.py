"""Command-line interface: exit codes, report files, and determinism."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from stokesqp import SparseOperator, build_grid
from stokesqp.cli import (EXIT_BAD_INPUT, EXIT_OK, EXIT_PROPERTY_FAILURE,
                          EXIT_STUDY_GATE, _stokes_pair, run)
from stokesqp.mmio import read_vector, write_matrix, write_vector
from stokesqp.stokes import ManufacturedCase


def _write_hand_problem(directory):
    directory.mkdir(exist_ok=True)
    write_matrix(directory / "A.mtx",
                 SparseOperator.from_dense(np.eye(2), symmetric=True))
    write_matrix(directory / "C.mtx",
                 SparseOperator.from_dense([[1.0, 0.0]]))
    write_vector(directory / "b.txt", np.array([1.0, 1.0]))
    return directory


def _write_random_problem(directory, seed=60, n=14, m=4):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    directory.mkdir(exist_ok=True)
    write_matrix(directory / "A.mtx",
                 SparseOperator.from_dense(g @ g.T + n * np.eye(n),
                                           symmetric=True))
    write_matrix(directory / "C.mtx",
                 SparseOperator.from_dense(rng.standard_normal((m, n))))
    write_vector(directory / "b.txt", rng.standard_normal(n))
    write_vector(directory / "d.txt", rng.standard_normal(m))
    return directory


# -- qp-solve --------------------------------------------------------------


def test_qp_solve_hand_instance(tmp_path):
    problem = _write_hand_problem(tmp_path / "prob")
    code = run(["qp-solve", "--input", str(problem), "--infsup"])
    assert code == EXIT_OK
    assert np.allclose(read_vector(problem / "x.txt"), [0.0, 1.0], atol=1e-12)
    assert np.allclose(read_vector(problem / "lambda.txt"), [-1.0], atol=1e-12)
    report = json.loads((problem / "report.json").read_text())
    assert report["method"] == "direct"
    assert report["infsup_beta"] == pytest.approx(1.0, abs=1e-10)
    assert report["residual_stationarity"] <= 1e-10


def test_qp_solve_methods_agree(tmp_path):
    problem = _write_random_problem(tmp_path / "prob")
    xs, lams = [], []
    for method in ("direct", "nullspace", "schur"):
        out = tmp_path / method
        code = run(["qp-solve", "--input", str(problem),
                    "--output", str(out), "--method", method])
        assert code == EXIT_OK
        xs.append(read_vector(out / "x.txt"))
        lams.append(read_vector(out / "lambda.txt"))
        assert json.loads((out / "report.json").read_text())["method"] == method
    for k in (1, 2):
        assert np.linalg.norm(xs[k] - xs[0]) <= 1e-7 * np.linalg.norm(xs[0])
        assert np.linalg.norm(lams[k] - lams[0]) <= \
            1e-7 * max(np.linalg.norm(lams[0]), 1.0)


def test_qp_solve_missing_constraint_file(tmp_path):
    problem = _write_hand_problem(tmp_path / "prob")
    (problem / "C.mtx").unlink()
    code = run(["qp-solve", "--input", str(problem)])
    assert code == EXIT_BAD_INPUT


def test_qp_solve_malformed_matrix_names_line(tmp_path, capsys):
    problem = _write_hand_problem(tmp_path / "prob")
    (problem / "A.mtx").write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 oops\n")
    code = run(["qp-solve", "--input", str(problem)])
    assert code == EXIT_BAD_INPUT
    assert ":3:" in capsys.readouterr().err


def test_qp_solve_requires_input(capsys):
    assert run(["qp-solve"]) == EXIT_BAD_INPUT


def test_invalid_tolerance_rejected(tmp_path):
    problem = _write_hand_problem(tmp_path / "prob")
    assert run(["qp-solve", "--input", str(problem),
                "--tol", "0"]) == EXIT_BAD_INPUT
    assert run(["qp-solve", "--input", str(problem),
                "--tol=-1e-8"]) == EXIT_BAD_INPUT


def test_usage_errors_map_to_bad_input_code(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        run(["qp-solve", "--no-such-flag"])
    assert excinfo.value.code == EXIT_BAD_INPUT


def test_invalid_grid_size_rejected(tmp_path):
    assert run(["stokes", "--n", "1",
                "--output", str(tmp_path)]) == EXIT_BAD_INPUT


# -- stokes ----------------------------------------------------------------


def test_stokes_report_taylor_green(tmp_path):
    code = run(["stokes", "--n", "8", "--output", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "stokes_report.json").read_text())
    assert report["case"] == "taylor_green"
    assert report["n"] == 8
    assert report["discrepancy"]["velocity_relative"] <= 1e-8
    assert report["discrepancy"]["pressure_relative"] <= 1e-8
    for formulation in ("coupled", "minimization"):
        block = report[formulation]
        assert block["divergence_relative"] <= 1e-10
        assert np.isfinite(block["errors"]["l2_u"])
    for name in ("fields_coupled.csv", "fields_minimization.csv"):
        with open(tmp_path / name, newline="") as fh:
            rows = list(csv.reader(fh))
        grid = build_grid(8)
        assert len(rows) == 1 + grid.n_velocity + grid.n_pressure


def test_stokes_report_polynomial_n16(tmp_path):
    code = run(["stokes", "--case", "polynomial", "--n", "16",
                "--output", str(tmp_path)])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "stokes_report.json").read_text())
    for formulation in ("coupled", "minimization"):
        block = report[formulation]
        assert block["residual_feasibility"] <= 1e-10
        for value in block["errors"].values():
            assert np.isfinite(value)


def test_stokes_zero_forcing_pair():
    zeros = np.zeros_like
    case = ManufacturedCase("zero", lambda x, y: zeros(x),
                            lambda x, y: zeros(x), lambda x, y: zeros(x),
                            lambda x, y: zeros(x), lambda x, y: zeros(x))
    (v1, p1, _), (v2, p2, _) = _stokes_pair(build_grid(4), case, 1e-12)
    for field in (v1.flat(), p1.flat(), v2.flat(), p2.flat()):
        assert np.max(np.abs(field)) <= 1e-14


def test_stokes_reports_are_deterministic(tmp_path):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert run(["stokes", "--n", "4", "--output", str(out1)]) == EXIT_OK
    assert run(["stokes", "--n", "4", "--output", str(out2)]) == EXIT_OK
    for name in ("stokes_report.json", "fields_coupled.csv",
                 "fields_minimization.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


# -- converge --------------------------------------------------------------


def test_converge_happy_path(tmp_path):
    code = run(["converge", "--n-list", "4,8", "--output", str(tmp_path)])
    assert code == EXIT_OK
    with open(tmp_path / "convergence.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "h", "l2_u", "l2_p", "linf_u", "order_u",
                       "order_p"]
    assert rows[1][5] == ""  # no order at the coarsest level
    order_u = float(rows[2][5])
    assert 1.8 <= order_u <= 2.2


def test_converge_single_level_rejected(tmp_path):
    assert run(["converge", "--n-list", "8",
                "--output", str(tmp_path)]) == EXIT_BAD_INPUT


def test_converge_unsorted_levels_rejected(tmp_path):
    assert run(["converge", "--n-list", "16,8",
                "--output", str(tmp_path)]) == EXIT_BAD_INPUT


def test_converge_exact_injection_self_test(tmp_path):
    code = run(["converge", "--n-list", "8,16", "--inject-exact",
                "--output", str(tmp_path)])
    assert code == EXIT_OK
    with open(tmp_path / "convergence.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert 1.8 <= float(rows[2][5]) <= 2.2
    assert 1.8 <= float(rows[2][6]) <= 2.2


def test_converge_exact_injection_linear_pressure(tmp_path):
    # the polynomial case's pressure is linear, so cell averaging reproduces
    # the point samples exactly and no pressure order can be observed
    code = run(["converge", "--n-list", "8,16", "--inject-exact",
                "--case", "polynomial", "--output", str(tmp_path)])
    assert code == EXIT_OK
    with open(tmp_path / "convergence.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert float(rows[2][2]) > 0.0  # velocity sampling error is real
    assert float(rows[1][3]) == 0.0  # pressure reproduced exactly
    assert rows[2][6] == ""
    assert 1.8 <= float(rows[2][5]) <= 2.2


# -- infsup ----------------------------------------------------------------


def test_infsup_close_grids_pass_gate(tmp_path):
    code = run(["infsup", "--n-list", "16,32", "--output", str(tmp_path)])
    assert code == EXIT_OK
    with open(tmp_path / "infsup.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["n", "h", "beta"]
    betas = [float(r[2]) for r in rows[1:]]
    assert all(b > 0 for b in betas)
    assert max(betas) / min(betas) < 1.1


def test_infsup_edge_grid_runs(tmp_path):
    code = run(["infsup", "--n", "2", "--output", str(tmp_path)])
    assert code == EXIT_OK
    with open(tmp_path / "infsup.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert float(rows[1][2]) == pytest.approx(np.sqrt(0.5), abs=1e-10)


def test_infsup_variation_gate_fires(tmp_path, capsys):
    # betas at 8/16/32 are individually positive but spread past the 10%
    # band, so the mesh-independence gate must report failure
    code = run(["infsup", "--n-list", "8,16,32", "--output", str(tmp_path)])
    assert code == EXIT_STUDY_GATE
    assert "max/min" in capsys.readouterr().err
    with open(tmp_path / "infsup.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4
    assert all(float(r[2]) > 0 for r in rows[1:])


def test_infsup_requires_some_grid_or_input(tmp_path):
    assert run(["infsup", "--output", str(tmp_path)]) == EXIT_BAD_INPUT


def test_infsup_projection_case_problem_directory(tmp_path):
    rng = np.random.default_rng(61)
    q, _ = np.linalg.qr(rng.standard_normal((9, 4)))
    problem = tmp_path / "prob"
    problem.mkdir()
    write_matrix(problem / "A.mtx",
                 SparseOperator.from_dense(np.eye(9), symmetric=True))
    write_matrix(problem / "C.mtx", SparseOperator.from_dense(q.T))
    write_vector(problem / "b.txt", rng.standard_normal(9))
    code = run(["infsup", "--input", str(problem)])
    assert code == EXIT_OK
    report = json.loads((problem / "infsup.json").read_text())
    assert report["beta_dual"] == pytest.approx(1.0, abs=1e-12)
    assert report["beta_primal"] == pytest.approx(1.0, abs=1e-12)
    assert report["constraints"] == 4
    assert report["unknowns"] == 9


# -- verify ----------------------------------------------------------------


def test_verify_all_properties_pass(tmp_path, capsys):
    code = run(["verify", "--seed", "0", "--output", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    lines = [l for l in out.splitlines() if l.startswith("PROPERTY ")]
    assert len(lines) == 7
    assert all(": PASS" in l for l in lines)
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["all_passed"] is True
    assert len(report["properties"]) == 7


def test_verify_corruption_hook_fails(tmp_path, capsys):
    code = run(["verify", "--seed", "0", "--corrupt",
                "--output", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == EXIT_PROPERTY_FAILURE
    assert ": FAIL" in out
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert report["all_passed"] is False
    assert report["corrupt"] is True


def test_verify_reports_are_byte_identical(tmp_path):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert run(["verify", "--seed", "5", "--output", str(out1)]) == EXIT_OK
    assert run(["verify", "--seed", "5", "--output", str(out2)]) == EXIT_OK
    assert (out1 / "verify_report.json").read_bytes() == \
        (out2 / "verify_report.json").read_bytes()


# -- entry point -----------------------------------------------------------


def test_console_script_is_wired():
    proc = subprocess.run(
        [sys.executable, "-m", "stokesqp.cli", "verify", "--seed", "1"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PROPERTY" in proc.stdout
