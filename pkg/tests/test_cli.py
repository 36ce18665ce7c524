import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dualvol import __version__
from dualvol.cli import main
from dualvol.data import LoadError, load_matrix, read_table

REPORT_KEYS = {"schema_version", "method", "n", "m", "k", "seed", "subset", "objectives", "bounds",
               "prediction_error", "diagnostics", "wall_time_ms"}


@pytest.fixture
def a_star_csv(tmp_path):
    p = tmp_path / "a_star.csv"
    p.write_text("1,0,1\n0,1,2\n")
    return p


@pytest.fixture
def regression_csv(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((120, 3))
    y = X @ np.array([1.0, 2.0, -1.0]) + 0.1 * rng.standard_normal(120)
    p = tmp_path / "reg.csv"
    lines = ["f1,f2,f3,target"] + [",".join(f"{v:.10g}" for v in row) for row in np.column_stack([X, y])]
    p.write_text("\n".join(lines) + "\n")
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_load_a_star(a_star_csv):
    D = load_matrix(a_star_csv)
    assert (D.n, D.m) == (2, 3)
    assert np.array_equal(D.entries, [[1, 0, 1], [0, 1, 2]])


def test_load_formats(tmp_path):
    (tmp_path / "a.tsv").write_text("1\t0\t1\n0\t1\t2\n")
    (tmp_path / "a.txt").write_text("1 0  1\n 0 1 2\n\n")
    assert load_matrix(tmp_path / "a.tsv", "tsv").m == 3
    assert load_matrix(tmp_path / "a.txt", "whitespace").m == 3


def test_load_error_location(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,0,1\n0,1,x\n")
    with pytest.raises(LoadError) as exc:
        read_table(p)
    assert (exc.value.row, exc.value.col) == (2, 3)
    p.write_text("1,0,1\n0,1\n")
    with pytest.raises(LoadError) as exc:
        read_table(p)
    assert exc.value.row == 2


def test_samples_as_rows_transposes(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4000, 3))
    p = tmp_path / "rows.csv"
    np.savetxt(p, X, delimiter=",")
    D = load_matrix(p, orientation="samples-as-rows")
    assert (D.n, D.m) == (3, 4000)


def test_sample_report(capsys, a_star_csv):
    code, out, _ = run(capsys, "sample", "--input", a_star_csv, "--k", 2, "--method", "dvs-exact", "--seed", 7)
    assert code == 0
    rep = json.loads(out)
    assert REPORT_KEYS <= set(rep)
    assert rep["seed"] == 7 and rep["library_version"] == __version__
    assert len(rep["subset"]) == 2 and rep["subset"] == sorted(rep["subset"])
    assert all(1 <= i <= 3 for i in rep["subset"])
    assert rep["diagnostics"]["logZ"] == pytest.approx(math.log(6))
    assert set(rep["objectives"]) == {"A", "E", "D"}
    assert all(v is not None for v in rep["objectives"].values())


@pytest.mark.parametrize("method", ["dvs-exact", "dvs-mcmc", "dvs-approx", "unif", "lev", "pl", "fedorov", "derand"])
def test_every_method_runs(capsys, a_star_csv, method):
    code, out, _ = run(capsys, "sample", "--input", a_star_csv, "--k", 2, "--method", method, "--seed", 1)
    assert code == 0
    assert json.loads(out)["method"] == method


def test_derandomize_command(capsys, a_star_csv):
    code, out, _ = run(capsys, "derandomize", "--input", a_star_csv, "--k", 2)
    assert json.loads(out)["subset"] == [1, 3]


def test_csv_output(capsys, a_star_csv):
    code, out, _ = run(capsys, "sample", "--input", a_star_csv, "--k", 2, "--method", "derand", "--output-format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "method,k,seed,subset,A,E,D"
    assert lines[1].startswith("derand,2,0,1 3,")


def test_bad_k_is_json_error(capsys, a_star_csv):
    code, out, err = run(capsys, "sample", "--input", a_star_csv, "--k", 5)
    assert code != 0 and out == ""
    assert json.loads(err)["error"]["type"] == "ValueError"


def test_load_error_is_json(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,0,1\n0,1,x\n")
    code, _, err = run(capsys, "sample", "--input", p, "--k", 2)
    e = json.loads(err)["error"]
    assert code != 0 and (e["row"], e["col"]) == (2, 3)


def test_rank_deficient_input_is_json_error(capsys, tmp_path):
    p = tmp_path / "low.csv"
    p.write_text("1,2,3\n2,4,6\n")
    code, _, err = run(capsys, "sample", "--input", p, "--k", 2)
    assert code != 0 and json.loads(err)["error"]["type"] == "SingularMatrixError"


def test_validate_command(capsys, a_star_csv):
    code, out, err = run(capsys, "validate", "--input", a_star_csv, "--k", 2, "--samples", 3000)
    assert code == 0
    summary = json.loads(out)
    assert summary["passed"] and len(summary["checks"]) == 10
    assert err.count("[PASS]") == 10


def test_design_reports_share_fingerprint(capsys, regression_csv):
    reps = []
    for method in ("lev", "dvs-mcmc"):
        code, out, _ = run(capsys, "design", "--input", regression_csv, "--header", "--k", 6,
                           "--method", method, "--seed", 3, "--steps", 200)
        assert code == 0
        reps.append(json.loads(out))
    assert reps[0]["dataset_fingerprint"] == reps[1]["dataset_fingerprint"]
    assert all(r["n"] == 3 and r["m"] == 120 for r in reps)
    assert all(r["prediction_error"] is not None for r in reps)


def test_design_csv_curve(capsys, regression_csv):
    code, out, _ = run(capsys, "design", "--input", regression_csv, "--header", "--response", "target",
                       "--k", "4,8", "--method", "unif", "--replicates", 3, "--output-format", "csv")
    lines = out.strip().splitlines()
    assert lines[0] == "method,k,replicate,seed,prediction_error,wall_time_ms"
    assert len(lines) == 1 + 2 * 3


def _strip_time(text):
    rep = json.loads(text)
    rep.pop("wall_time_ms")
    return json.dumps(rep, sort_keys=True)


@pytest.mark.parametrize("method", ["dvs-exact", "dvs-mcmc", "dvs-approx", "lev", "fedorov"])
def test_reports_identical_across_processes(a_star_csv, method):
    cmd = [sys.executable, "-m", "dualvol.cli", "sample", "--input", str(a_star_csv), "--k", "2",
           "--method", method, "--seed", "11"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert _strip_time(a) == _strip_time(b)


def test_output_file(tmp_path, capsys, a_star_csv):
    out = tmp_path / "r.json"
    code, stdout, _ = run(capsys, "sample", "--input", a_star_csv, "--k", 2, "--output", out)
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["k"] == 2
