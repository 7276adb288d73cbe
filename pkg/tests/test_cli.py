import json
import subprocess
import sys

import jsonschema
import pytest

from comfix.cli import main
from comfix.report import STATUS, load_schema
from comfix.scenario import shipped_scenarios

from .conftest import pair_toml
from .oracles import DOTTIE

SCHEMA = load_schema()


def run(capsys, *argv):
    code = main([*argv, "--no-timestamp"])
    out = capsys.readouterr().out
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    assert report["exit_code"] == code
    assert report["status"] == STATUS[code]
    return code, report


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_example1(capsys):
    code, rep = run(capsys, "check", "example1")
    assert code == 0
    assert rep["hypotheses"]["contraction"][0]["k_hat"] == pytest.approx(2 / 3, abs=7e-4)


def test_check_printed_example(capsys):
    code, rep = run(capsys, "check", "example2_as_printed")
    assert code == 1
    g = next(r for r in rep["hypotheses"]["self_mapping"] if r["map"] == "g")
    assert g["ok"] is False
    assert g["escaping_point"] == [0.5]
    assert g["image"][0] == pytest.approx(3.6945, abs=1e-4)


def test_check_noncommuting(capsys):
    code, rep = run(capsys, "check", "noncommuting")
    assert code == 1
    assert rep["hypotheses"]["commutativity"][0]["defect"] == pytest.approx(1.0)


def test_solve_example1(capsys):
    code, rep = run(capsys, "solve", "example1")
    assert code == 0
    assert rep["solve"]["l1"] == [1.0]
    assert rep["solve"]["residual_f"] <= 1e-12 and rep["solve"]["residual_g"] <= 1e-12


def test_solve_cos(capsys):
    code, rep = run(capsys, "solve", "banach_cos")
    assert code == 0
    assert rep["solve"]["l1"][0] == pytest.approx(DOTTIE, abs=1e-8)


def test_solve_divergent(capsys):
    code, rep = run(capsys, "solve", "divergent")
    assert code == 1
    assert rep["hypotheses"]["orbit"]["verdict"] == "unbounded"
    assert rep["solve"] is None


def test_solve_force_runs_anyway(capsys):
    code, rep = run(capsys, "solve", "noncommuting", "--force")
    assert code in (1, 2)
    assert rep["error"]


def test_solve_inconclusive(tmp_path, capsys):
    # constant contractor against a constant dominator: every pair is degenerate
    path = write(tmp_path, pair_toml("0.5 + 0*x", "0.5 + 0*x", 0.0, 1.0, 0.5))
    code, rep = run(capsys, "solve", path)
    assert code == 4
    assert rep["hypotheses"]["unknowns"]


def test_certify_fixed(capsys):
    code, rep = run(capsys, "certify", "example1", "--point", "1.0")
    assert code == 0
    assert rep["certify"]["residuals"] == {"f": 0.0, "g": 0.0}
    assert rep["certify"]["orbit"]["verdict"] == "bounded"


def test_certify_not_fixed(capsys):
    code, rep = run(capsys, "certify", "example1", "--point", "2.0")
    assert code == 2
    assert rep["certify"]["residuals"]["f"] == 2.0


def test_certify_cos(capsys):
    code, _ = run(capsys, "certify", "banach_cos", "--point", "0.7390851332")
    assert code == 0


def test_certify_bad_point(capsys):
    code, rep = run(capsys, "certify", "example1", "--point", "1,2")
    assert code == 3
    assert "coordinate" in rep["error"]


def test_scan_expansive(capsys):
    code, rep = run(capsys, "scan", "expansive")
    assert code == 0
    assert [c["point"] for c in rep["scan"]["candidates"]] == [[1.0]]
    assert rep["scan"]["k_low"] == pytest.approx(2.0, abs=1e-3)


def _expansive(tmp_path, src):
    text = (
        'name = "e"\ndimension = 1\n[domain]\nlower = [0.0]\nupper = [1.0]\n'
        f'[maps]\nf = "{src}"\n[problem]\ntype = "expansive"\nmap = "f"\nx0 = [0.0]\n'
    )
    return write(tmp_path, text)


def test_scan_no_fixed_point(tmp_path, capsys):
    code, rep = run(capsys, "scan", _expansive(tmp_path, "x+1"))
    assert code == 2
    assert rep["scan"]["candidates"] == []


def test_scan_contracting_map(tmp_path, capsys):
    code, rep = run(capsys, "scan", _expansive(tmp_path, "x/2"))
    assert code == 1
    assert rep["scan"]["candidates"][0]["point"] == [0.0]


def test_scan_on_pair_is_input_error(capsys):
    code, _ = run(capsys, "scan", "example1")
    assert code == 3


def test_missing_file(capsys):
    code, rep = run(capsys, "check", "/nonexistent.toml")
    assert code == 3
    assert rep["scenario_name"] is None


def test_bad_toml(tmp_path, capsys):
    code, rep = run(capsys, "check", write(tmp_path, "name = \n"))
    assert code == 3
    assert "line 1" in rep["error"]


def test_overrides(capsys):
    code, rep = run(capsys, "check", "example1", "--seed", "5", "--n-samples", "20")
    assert code == 0
    assert rep["hypotheses"]["contraction"][0]["n_pairs"] > 190


def test_report_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["solve", "linear_pair", "--report", str(out)])
    assert code == 0
    assert capsys.readouterr().out == ""
    report = json.loads(out.read_text())
    jsonschema.validate(report, SCHEMA)
    assert "timestamp" in report


def test_list(capsys):
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == shipped_scenarios()


@pytest.mark.parametrize("name", ["example1", "chain_powers", "proposition_powers"])
def test_byte_identical(name, capsys):
    main(["solve", name, "--no-timestamp"])
    first = capsys.readouterr().out
    main(["solve", name, "--no-timestamp"])
    assert capsys.readouterr().out == first


def test_console_script_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "comfix.cli", "check", "example1", "--no-timestamp"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "ok"
    assert "comfix check: ok" in proc.stderr
