import json
import subprocess
import sys

import pytest

from quadwalk.cli import main


def run_json(capsys, *argv):
    code = main([*argv, "--json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_enumerate(capsys):
    code, doc = run_json(capsys, "enumerate", "--model", "kreweras", "--order", "3")
    assert code == 0 and doc["schema"] == "quadwalk/enumerate@1"


def test_orbit(capsys):
    code, doc = run_json(capsys, "orbit", "--model", "kreweras")
    assert code == 0 and doc["schema"] == "quadwalk/orbit@1"
    assert "6" in json.dumps(doc)


def test_orbit_text(capsys):
    assert main(["orbit", "--model", "G_lambda"]) == 0
    assert "12" in capsys.readouterr().out


def test_decouple(capsys):
    code, doc = run_json(capsys, "decouple", "--model", "kreweras", "--fraction", "X*Y")
    assert code == 0 and doc["schema"] == "quadwalk/decouple@1"


def test_certify_with_recipe(capsys, tmp_path):
    path = tmp_path / "cert.json"
    code = main(["certify", "--model", "kreweras", "--order", "9", "--recipe", "P1^2 + P2 + P1/t",
                 "--json", str(path)])
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["schema"] == "quadwalk/cert-report@1" and doc["ok"]


def test_certify_failure_exit_code(capsys):
    assert main(["certify", "--model", "kreweras", "--order", "6"]) != 0


def test_guess(capsys):
    code, doc = run_json(capsys, "guess", "--series", json.dumps(["1"] * 12), "--degT", "1", "--degt", "1")
    assert code == 0 and doc["found"]
    assert doc["annihilator"]["terms"] == {"0,0": "1", "1,0": "-1", "1,1": "1"}
    code, doc = run_json(capsys, "guess", "--series", json.dumps([1, 2, 7, 3, 11, 5, 1, 9, 8, 2, 4, 6]),
                         "--degT", "1", "--degt", "1")
    assert code == 1 and not doc["found"]


def test_errors_go_to_stderr(capsys):
    assert main(["orbit", "--model", "/no/such/model"]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["decouple", "--model", "kreweras", "--fraction", "X +* Y"]) == 2


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "quadwalk.cli", "enumerate", "--model", "kreweras",
                          "--order", "2"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
