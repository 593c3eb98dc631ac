import json

import numpy as np
import pytest

from hypclif.cli import (EXIT_INDETERMINATE, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, EXIT_WITNESS, main,
                         sidecar_path)
from hypclif.sdp import SdpProblem, export_sdpa


@pytest.fixture
def polyfile(tmp_path):
    def make(text, name="h.txt"):
        path = tmp_path / name
        path.write_text(text + "\n")
        return str(path)
    return make


def run(argv, tmp_path, name="report.json"):
    out = tmp_path / name
    code = main(argv + ["--json", str(out)])
    return code, json.loads(out.read_text())


def test_check_hyperbolic(polyfile, tmp_path):
    code, rep = run(["check", "-p", polyfile("x1^2 - x2^2 - x3^2"), "-e", "1,0,0"], tmp_path)
    assert code == EXIT_OK and rep["check"]["hyperbolic"] is True
    assert len(rep["input"]["sha256"]) == 64 and rep["exit_code"] == 0


def test_check_witness(polyfile, tmp_path):
    code, rep = run(["check", "-p", polyfile("x1^2 + x2^2"), "-e", "1,0"], tmp_path)
    assert code == EXIT_WITNESS and len(rep["check"]["witness"]) == 2


@pytest.mark.parametrize("argv", [
    ["check", "-e", "1,0"],
    ["check", "-p", "/nonexistent/h.txt", "-e", "1,0"],
])
def test_input_errors(argv, tmp_path):
    assert main(argv) == EXIT_INPUT


def test_usage_errors_share_input_code():
    with pytest.raises(SystemExit) as exc:
        main(["member", "-e", "1,0"])
    assert exc.value.code == EXIT_INPUT


def test_bad_polynomial(polyfile):
    assert main(["check", "-p", polyfile("x1^2 + x2"), "-e", "1,0"]) == EXIT_INPUT
    assert main(["check", "-p", polyfile("x1^2 - x2^2"), "-e", "1,1"]) == EXIT_INPUT
    assert main(["check", "-p", polyfile("x1^2 -"), "-e", "1,0"]) == EXIT_INPUT


def test_bad_tolerance(polyfile):
    assert main(["check", "-p", polyfile("x1"), "-e", "1", "--tol", "-1"]) == EXIT_INPUT


def test_member(polyfile, tmp_path):
    code, rep = run(["member", "-p", polyfile("x1^2 - x2^2 - x3^2"), "-e", "1,0,0", "--at", "2,1,0"], tmp_path)
    assert code == EXIT_OK and rep["member"]["verdict"] == "Interior"
    assert rep["member"]["min_root"] == pytest.approx(1.0)


def test_hermite_with_sos(polyfile, tmp_path):
    code, rep = run(["hermite", "-p", polyfile("x1^2 - x2^2 - x3^2"), "-e", "1,0,0", "--sos", "--at", "1,1,1"],
                    tmp_path)
    assert code == EXIT_OK and rep["hermite"]["sos"]["found"] is True
    assert min(rep["hermite"]["at"]["eigenvalues"]) >= -1e-12


def test_program_rejects_low_k(polyfile):
    assert main(["program", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0", "--k", "1"]) == EXIT_INPUT


def test_program_export_deterministic(polyfile, tmp_path):
    h = polyfile("x1^2 - x2^2")
    a, b = tmp_path / "a.dat-s", tmp_path / "b.dat-s"
    assert main(["program", "-p", h, "-e", "1,0", "--export", str(a)]) == EXIT_OK
    assert main(["program", "-p", h, "-e", "1,0", "--export", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert sidecar_path(a).read_bytes() == sidecar_path(b).read_bytes()
    side = json.loads((tmp_path / "a.index.json").read_text())
    assert side["k"] == 3 and side["variables"][-1]["role"] == "lambda"


def test_small_k_warning(polyfile, capsys):
    assert main(["program", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0", "--k", "2"]) == EXIT_OK
    assert "warning" in capsys.readouterr().out


def test_solve_sdpa_file(tmp_path):
    E = np.zeros((2, 2))
    E[0, 0] = 1.0
    path = tmp_path / "p.dat-s"
    path.write_text(export_sdpa(SdpProblem.from_constraints([2], [([E], 1.0)], [np.eye(2)])))
    # max tr X s.t. X11 = 1 is unbounded: the solver must not claim an optimum
    code, rep = run(["solve", str(path)], tmp_path)
    assert code == EXIT_INDETERMINATE


def test_solve_bad_sdpa_file(tmp_path):
    path = tmp_path / "bad.dat-s"
    path.write_text("1\n1\n2\n1.0\n1 1 1\n")
    code, rep = run(["solve", str(path)], tmp_path)
    assert code == EXIT_INPUT and "line 5" in rep["error"]


def test_solve_moment_program(polyfile, tmp_path):
    code, rep = run(["solve", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0"], tmp_path)
    assert code == EXIT_OK and rep["status"] == "Feasible" and rep["k"] == 3
    assert rep["solve"]["literal_residuals"]["ideal"] <= 1e-8


def test_gns_writes_operators(polyfile, tmp_path):
    ops = tmp_path / "ops.json"
    code, rep = run(["gns", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0", "--out", str(ops)], tmp_path)
    assert code == EXIT_OK and rep["gns"]["r"] == 2
    data = json.loads(ops.read_text())
    assert data["n"] == 2 and data["r"] == 2


def test_verify_operator_file(polyfile, tmp_path):
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps({"n": 2, "r": 2, "M": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]], "v": [1, 0]}))
    code, rep = run(["verify", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0", "--ops", str(ops)], tmp_path)
    assert code == EXIT_OK and all(rep["verify"]["checks"].values())


def test_verify_wrong_operators(polyfile, tmp_path):
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps({"n": 2, "r": 2, "M": [[[1, 0], [0, 1]], [[0, 2], [2, 0]]], "v": [1, 0]}))
    code, rep = run(["verify", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0", "--ops", str(ops)], tmp_path)
    assert code == EXIT_VERIFY and not rep["verify"]["checks"]["line_identity"]


def test_verify_operator_size_mismatch(polyfile, tmp_path):
    ops = tmp_path / "ops.json"
    ops.write_text(json.dumps({"n": 1, "r": 1, "M": [[[1]]], "v": [1]}))
    assert main(["verify", "-p", polyfile("x1^2 - x2^2"), "-e", "1,0", "--ops", str(ops)]) == EXIT_INPUT


def test_pipeline_lorentz(polyfile, tmp_path):
    code, rep = run(["pipeline", "-p", polyfile("x1^2 - x2^2 - x3^2"), "-e", "1,0,0"], tmp_path)
    assert code == EXIT_OK and rep["status"] == "Feasible"
    for key in ("input", "k", "solve", "gns", "verify", "config"):
        assert key in rep
    assert rep["config"]["tol"] == 1e-8 and rep["config"]["rank_tol"] == 1e-7
    assert rep["verify"]["cone_agreement"] == 1.0


def test_pipeline_deterministic(polyfile, tmp_path):
    h = polyfile("x1^2 - x2^2")
    _, a = run(["pipeline", "-p", h, "-e", "1,0"], tmp_path, "a.json")
    _, b = run(["pipeline", "-p", h, "-e", "1,0"], tmp_path, "b.json")
    a["config"].pop("json_out"), b["config"].pop("json_out")
    assert a == b


def test_pipeline_not_hyperbolic(polyfile, tmp_path):
    code, rep = run(["pipeline", "-p", polyfile("x1^2 + x2^2"), "-e", "1,0"], tmp_path)
    assert code == EXIT_WITNESS and rep["status"] == "NotHyperbolic"


def test_module_entry_point(polyfile):
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "hypclif", "check", "-p", polyfile("x1"), "-e", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "hyperbolic" in res.stdout
