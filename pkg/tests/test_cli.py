import json
import os
import subprocess
import sys

import pytest

from lambdaloc import cli
from lambdaloc.pauli import ExpectationVector, expectation_to_json


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_vertices_and_facets(tmp_path, capsys):
    code, out, _ = run(["vertices", "--n", 1, "--out", tmp_path / "v.json", "--json"], capsys)
    assert code == 0 and json.loads(out)["count"] == 8
    assert json.loads((tmp_path / "v.json").read_text())["count"] == 8
    code, out, _ = run(["facets", "--n", 2, "--full-stab", "--out", tmp_path / "f.json", "--json"], capsys)
    assert code == 0 and json.loads(out)["facets"] == 60
    d = json.loads((tmp_path / "f.json").read_text())
    assert d["facets"][0]["offset"] == 0 and len(d["facets"][0]["normal"]) == 16


def test_member_exit_codes(tmp_path, capsys):
    mm = dump(tmp_path / "mm.json", expectation_to_json(ExpectationVector.maximally_mixed(2)))
    code, out, _ = run(["member", "--op", mm], capsys)
    assert code == 0 and out.startswith("interior")
    bad = dump(tmp_path / "bad.json", expectation_to_json(ExpectationVector(1, [1, 2, 0, 0], "rational")))
    code, out, _ = run(["member", "--op", bad, "--json"], capsys)
    assert code == 2 and json.loads(out)["violated"] == ["<-x1>"]


def test_usage_errors(tmp_path, capsys):
    for argv in (["nope"], ["member"], []):
        with pytest.raises(SystemExit) as e:
            cli.main(argv)
        assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        cli.main(["facets", "--n", "2", "--out", "x", "--bogus"])
    assert e.value.code == 1
    code, _, err = run(["member", "--op", tmp_path / "missing.json"], capsys)
    assert code == 1 and "cannot read" in err
    code, _, _ = run(["phase-space", "--name", "MAXW", "--n", 3, "--out", tmp_path / "x.json"], capsys)
    assert code == 1


def test_classify_and_ns(tmp_path, capsys):
    pair = {"n": 1, "omega": [{"x": "1", "z": "0"}, {"x": "0", "z": "1"}, {"x": "1", "z": "1"}], "gamma": [0, 1, 0]}
    code, out, _ = run(["classify", "--pair", dump(tmp_path / "p.json", pair), "--json"], capsys)
    assert code == 0 and json.loads(out) == {"class": "deterministic", "maximal": True, "tags": ["deterministic", "cnc"]}
    op = dump(tmp_path / "op.json", expectation_to_json(ExpectationVector(1, [1, 1, -1, 1], "rational")))
    assert run(["ns", "to-table", "--op", op, "--out", tmp_path / "t.json"], capsys)[0] == 0
    assert run(["ns", "to-op", "--table", tmp_path / "t.json", "--out", tmp_path / "back.json"], capsys)[0] == 0
    assert json.loads((tmp_path / "back.json").read_text()) == json.loads(op.read_text())
    assert run(["vertex-check", "--op", op], capsys)[0] == 0


def test_state_robustness_simulate_oracle(tmp_path, capsys):
    g = dump(tmp_path / "g.json", {"n": 2, "edges": [[1, 2]]})
    st = tmp_path / "s.json"
    assert run(["state", "magic-cluster", "--graph", g, "--magic", "1,2", "--out", st], capsys)[0] == 0
    cat = tmp_path / "det.json"
    assert run(["phase-space", "--name", "det", "--n", 2, "--out", cat], capsys)[0] == 0
    code, out, _ = run(["robustness", "--state", st, "--phase-space", cat, "--out", tmp_path / "q.json", "--json"], capsys)
    assert code == 0 and json.loads(out)["value"] > 1
    assert json.loads((tmp_path / "q.json").read_text())["catalog"] == "DET"
    sch = dump(tmp_path / "sch.json", {"steps": [{"qubit": 2, "basis": {"": "X"}}, {"qubit": 1, "basis": {"0": "Y", "1": "X"}}]})
    code, _, err = run(["simulate", "--state", st, "--schedule", sch, "--phase-space", cat, "--mode", "exact"], capsys)
    assert code == 2 and "outside" in err
    args = ["simulate", "--state", st, "--schedule", sch, "--phase-space", cat, "--mode", "quasi",
            "--shots", 3000, "--seed", 1, "--out", tmp_path / "r.json"]
    assert run(args, capsys)[0] == 0
    first = (tmp_path / "r.json").read_bytes()
    assert run(args, capsys)[0] == 0
    assert (tmp_path / "r.json").read_bytes() == first
    code, out, _ = run(["oracle", "--state", st, "--schedule", sch, "--json"], capsys)
    assert code == 0 and sum(json.loads(out).values()) == pytest.approx(1)
    code, _, err = run(["simulate", "--state", st, "--schedule", sch, "--phase-space", cat, "--mode", "sample"], capsys)
    assert code == 1 and "--seed" in err


def test_repro_table1(monkeypatch, capsys, table1):
    monkeypatch.setattr(cli, "table1_values", lambda backend="simplex": table1)
    code, out, _ = run(["repro", "table1", "--json"], capsys)
    d = json.loads(out)
    assert set(d) == {"L3", "K3"} and set(d["K3"]) == {"LC2", "LC1", "DET", "CNC", "STAB"}
    assert d["L3"]["STAB"]["reference"] == 2.219
    assert code == (0 if all(c["match"] for row in d.values() for c in row.values()) else 2)


def test_console_script(tmp_path):
    exe = os.path.join(os.path.dirname(sys.executable), "lambdaloc")
    cmd = [exe] if os.path.exists(exe) else [sys.executable, "-m", "lambdaloc.cli"]
    out = subprocess.run(cmd + ["vertices", "--n", "1", "--out", str(tmp_path / "v.json")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "8 vertices" in out.stdout
