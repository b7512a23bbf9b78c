import json
import subprocess
import sys

import pytest

from weaklab.cli import main

SCENARIO = {"schema": 1, "name": "imag", "spectrum": {"kind": "imaginary-exponential", "r": 2},
            "experiment": {"type": "counterexample"}}


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(SCENARIO))
    return p


def test_run_and_compare(tmp_path, scenario_file, capsys):
    assert main(["run", str(scenario_file), "--out", str(tmp_path / "a")]) == 0
    assert "CertifiedNotDifferentiableAtZero" in capsys.readouterr().out
    assert main(["run", str(scenario_file), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b" / "run.json")]) == 0
    assert capsys.readouterr().out.strip() == "no differences"


def test_invalid_scenario_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({**SCENARIO, "typo": 1}))
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "typo" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 1


def test_compare_mismatch_exit_code(tmp_path, scenario_file):
    other = tmp_path / "o.json"
    other.write_text(json.dumps({**SCENARIO, "experiment": {"type": "counterexample", "count": 3}}))
    main(["run", str(scenario_file), "--out", str(tmp_path / "a")])
    main(["run", str(other), "--out", str(tmp_path / "b")])
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b")]) == 2


def test_catalog(capsys):
    assert main(["catalog"]) == 0
    out = capsys.readouterr().out
    assert "imaginary-exponential" in out and "AnalyticFails" in out


def test_module_entry_point(tmp_path, scenario_file):
    proc = subprocess.run([sys.executable, "-m", "weaklab", "run", str(scenario_file), "--out", str(tmp_path / "m")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and (tmp_path / "m" / "certificate.json").exists()
