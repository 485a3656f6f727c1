import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from tetrafractal import cli, verify
from tetrafractal.config import load_schema


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def check_schema(doc, name):
    jsonschema.Draft202012Validator(load_schema(name)).validate(doc)


@pytest.mark.parametrize("argv,schema", [
    (["geometry", "--n", "3"], "geometry"),
    (["inertia", "--n", "4"], "inertia"),
    (["assembly-maps", "--n", "3", "--matrices"], "assembly-maps"),
    (["linearize"], "linearize"),
    (["configs"], "configs"),
    (["truss", "--n", "1", "--payload", "5", "--sweep", "0:10:5"], "truss"),
    (["sim", "--perturb", "p=0.5", "--t", "0.2"], "sim"),
])
def test_outputs_validate(argv, schema, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 0
    check_schema(json.loads(out), schema)


def test_faults_default_minimum(tmp_path, capsys):
    out = tmp_path / "faults.json"
    code, _, _ = run(["faults", "--max-card", "8", "--no-sweep", "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    check_schema(doc, "faults")
    assert doc["minimum"] == 5 and len(doc["witness"]) == 5
    assert len(doc["D"]) == 4 and len(doc["layout"]) == 16


def test_faults_numeric_bounds(capsys):
    code, out, _ = run(["faults", "--max-card", "2", "--no-sweep", "--bounds", "1e12"], capsys)
    assert code == 0
    assert json.loads(out)["minimum_bound"] == ">= 3"
    code, _, err = run(["faults", "--bounds", "lots"], capsys)
    assert code == 2 and "--bounds" in err


def test_truss_csv(tmp_path, capsys):
    forces = tmp_path / "forces.csv"
    curves = tmp_path / "sweep.csv"
    code, _, _ = run(["truss", "--n", "2", "--scenario", "bottom3", "--payload", "30", "--out", str(forces),
                      "--sweep", "0:30:10", "--sweep-out", str(curves)], capsys)
    assert code == 0
    rows = list(csv.DictReader(forces.open()))
    assert list(rows[0]) == ["member_id", "node_i", "node_j", "length_m", "axial_N", "P_cr_N", "margin_N"]
    assert len(rows) == 96
    assert len(list(csv.DictReader(curves.open()))) == 4


def test_sim_csv_and_gains_file(tmp_path, capsys):
    gains = tmp_path / "gains.json"
    gains.write_text(json.dumps({"kp": 4.0, "ki": [1, 1, 1]}))
    traj = tmp_path / "traj.csv"
    code, out, _ = run(["sim", "--perturb", "q=0.2", "--t", "0.1", "--gains", str(gains), "--out", str(traj)],
                       capsys)
    assert code == 0
    assert json.loads(out)["gains"]["kp"] == [4.0, 4.0, 4.0]
    header = traj.read_text().splitlines()[0].split(",")
    assert header[0] == "t" and header[1:13] == ["x", "y", "z", "phi", "theta", "psi", "u", "v", "w",
                                                 "p", "q", "r"]
    assert header[13:] == ["omega_1", "omega_2", "omega_3", "omega_4"]
    assert len(traj.read_text().splitlines()) == 52


@pytest.mark.parametrize("argv", [["nope"], ["geometry", "--bogus"], [], ["truss", "--scenario", "side"]])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 64
    assert "usage" in err


def test_malformed_params_reports_position(tmp_path, capsys):
    bad = tmp_path / "p.json"
    bad.write_text('{\n  "truss": {\n    "module_mass": 1,,\n  }\n}\n')
    code, _, err = run(["truss", "--params", str(bad)], capsys)
    assert code == 2
    assert "line 3" in err and "column" in err


def test_invalid_params_reports_field(tmp_path, capsys):
    bad = tmp_path / "p.json"
    bad.write_text(json.dumps({"tetracopter": {"mass": -2}}))
    code, _, err = run(["linearize", "--params", str(bad)], capsys)
    assert code == 2 and "tetracopter/mass" in err
    bad.write_text(json.dumps({"rotors": {}}))
    code, _, err = run(["linearize", "--params", str(bad)], capsys)
    assert code == 2


def test_params_override_applies(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"tetracopter": {"mass": 1.48}}))
    _, out, _ = run(["linearize", "--params", str(p)], capsys)
    _, ref, _ = run(["linearize"], capsys)
    assert json.loads(out)["model"]["omega0"] == pytest.approx(json.loads(ref)["model"]["omega0"] * 2 ** 0.5)


def test_domain_error_exit(tmp_path, capsys):
    limit = tmp_path / "limit.json"
    limit.write_text(json.dumps({"geometry": {"max_depth": 6}}))
    code, _, err = run(["truss", "--payload", "-3"], capsys)
    assert code == 2 and "payload" in err
    code, _, _ = run(["geometry", "--n", "7", "--params", str(limit)], capsys)
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["configs"],
    ["faults", "--max-card", "5", "--no-sweep"],
    ["sim", "--perturb", "p=0.3", "--t", "0.2"],
])
def test_deterministic_output(argv, capsys):
    _, a, _ = run(argv + ["--seed", "7"], capsys)
    _, b, _ = run(argv + ["--seed", "7"], capsys)
    assert a == b


def test_verify_all_exit_codes(monkeypatch, tmp_path, capsys):
    out = tmp_path / "v.json"
    code, text, _ = run(["verify-all", "--only", "3,8,10", "--out", str(out)], capsys)
    assert code == 0 and text.count("[PASS]") == 3
    check_schema(json.loads(out.read_text()), "verify")
    monkeypatch.setattr(verify, "CHECKS", [(1, "always fails", lambda: (False, {}))])
    code, text, _ = run(["verify-all"], capsys)
    assert code == 3 and "[FAIL]" in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tetrafractal", "configs"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["total"] == 256
