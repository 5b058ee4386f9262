import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from w1plus.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "demos" / "scenarios"


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.json")))
def test_bundled_scenarios_pass(name, tmp_path, capsys):
    assert main(["run", str(SCENARIOS / name), "--out", str(tmp_path / "o.csv"), "--grid", "21"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "PASS" in out or "theorem does not apply" in out


def test_entropy_chain_csv(tmp_path, capsys):
    out = tmp_path / "e.csv"
    sc = write(tmp_path, {"mode": "entropy", "graph": "path 4", "f0": {"0": 1}, "f1": {"3": 1}, "grid": 101})
    assert main(["run", sc, "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 101
    assert all(float(r["Hpp_analytic"]) >= 0 for r in rows if r["Hpp_analytic"] != "nan")


def test_tensor_corner(tmp_path, capsys):
    sc = write(tmp_path, {"mode": "tensor", "graph": {"product": ["path 3", "path 2"]},
                          "f0": [[[0, 0], 1]], "f1": [[[2, 1], 1]]})
    assert main(["run", sc]) == 0
    assert "mode tensor" in capsys.readouterr().out


def test_binomial_translation(tmp_path, capsys):
    sc = write(tmp_path, {"mode": "binomial-w2", "f0": {"0": 0.5, "1": 0.5}, "f1": {"2": 0.5, "3": 0.5}})
    assert main(["run", sc]) == 0
    assert "theorem applies" in capsys.readouterr().out


def test_orient_dump(tmp_path, capsys):
    sc = write(tmp_path, {"mode": "orient", "graph": "path 4", "f0": {"0": 0.5, "2": 0.5},
                          "f1": {"1": 0.5, "3": 0.5}})
    assert main(["run", sc]) == 0
    assert "EG 2" in capsys.readouterr().out


def test_deterministic_csv(tmp_path):
    sc = write(tmp_path, {"mode": "bbtest", "graph": "hypercube 3", "f0": {"0": 1}, "f1": {"7": 1},
                          "seed": 5, "samples": 30})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", sc, "--out", str(a)]) == 0
    assert main(["run", sc, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "sample,I,I_ibp,lower_bound_general"


def test_check_failure_exit_1(tmp_path, capsys):
    sc = write(tmp_path, {"mode": "entropy", "graph": "path 4", "f0": {"0": 1}, "f1": {"3": 1},
                          "tol": {"fd_agreement": 0.0}})
    assert main(["run", sc]) == 1
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize("doc", [
    "{not json",
    json.dumps({"mode": "dance", "graph": "path 3", "f0": {"0": 1}, "f1": {"2": 1}}),
    json.dumps({"mode": "entropy", "graph": "path 3", "f0": {"9": 1}, "f1": {"2": 1}}),
    json.dumps({"mode": "entropy", "graph": "path 3", "f0": {"0": 0.3}, "f1": {"2": 1}}),
    json.dumps({"mode": "tensor", "graph": "path 3", "f0": {"0": 1}, "f1": {"2": 1}}),
    json.dumps({"mode": "entropy", "graph": "path 3", "f0": {"0": 1}, "f1": {"2": 1}, "grid": [0, 2]}),
    json.dumps({"mode": "entropy", "graph": "path 3", "f0": {"0": 1}, "f1": {"2": 1},
                "potential": {"V": "wavy"}}),
    json.dumps({"mode": "entropy", "graph": "blob 3", "f0": {"0": 1}, "f1": {"2": 1}}),
])
def test_parse_errors_exit_2(tmp_path, doc, capsys):
    p = tmp_path / "bad.json"
    p.write_text(doc)
    assert main(["run", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_file_and_bad_args(capsys):
    assert main(["run", "/nonexistent/scenario.json"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["run", "x.json", "--grid", "many"]) == 2


def test_nonconvergence_exit_3(tmp_path, capsys):
    sc = write(tmp_path, {"mode": "geodesic", "graph": "path 4", "f0": {"0": 0.3, "1": 0.7},
                          "f1": {"2": 0.25, "3": 0.75}, "max_iter": 3})
    assert main(["run", sc, "--tol", "1e-300"]) == 3
    assert "did not converge" in capsys.readouterr().err


def test_selftest(tmp_path, capsys):
    out = tmp_path / "self.csv"
    assert main(["selftest", "--seed", "3", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "psi >= 0" in text and "FAIL" not in text
    assert out.read_text().startswith("check,passed,detail")


def test_selftest_fault_injection(capsys):
    assert main(["selftest", "--inject-fault"]) == 1
    assert "BB equation violated" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    sc = SCENARIOS / "orient_two_chains.json"
    proc = subprocess.run([sys.executable, "-m", "w1plus", "run", str(sc)], capture_output=True, text=True)
    assert proc.returncode == 0 and "0 -> 1" in proc.stdout
