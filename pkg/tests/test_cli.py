import json

import pytest

from splinemart.cli import main


def test_construct_writes_json_and_verifies(tmp_path, capsys):
    out = tmp_path / "result.json"
    rc = main(
        [
            "construct",
            "--k",
            "1",
            "--eta",
            "1/2",
            "--steps",
            "2",
            "--out",
            str(out),
            "--trace",
            "full",
            "--verify",
        ]
    )
    assert rc == 0
    blob = json.loads(out.read_text())
    assert blob["k"] == 1 and len(blob["levels"]) == 3
    err = capsys.readouterr().err
    assert "ALL CHECKS PASSED" in err


def test_verify_from_file(tmp_path, capsys):
    out = tmp_path / "result.json"
    assert main(["construct", "--k", "1", "--steps", "2", "--out", str(out)]) == 0
    assert main(["verify", "--in", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_fresh_build(capsys):
    rc = main(["verify", "--k", "1", "--steps", "1", "--json"])
    assert rc == 0
    blob = json.loads(capsys.readouterr().out)
    assert blob["passed"] is True


def test_constants_csv(capsys):
    rc = main(["constants", "--k", "1", "--levels", "3"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "level,dimension,l1_norm"
    assert len(lines) == 4
    for line in lines[1:]:
        level, dim, norm = line.split(",")
        assert float(norm) == 1.0
        assert int(dim) == 2 ** int(level)


def test_uncond_json(capsys):
    rc = main(
        ["uncond", "--k", "1", "--p", "2.0", "--depth", "5", "--trials", "20", "--json"]
    )
    assert rc == 0
    blob = json.loads(capsys.readouterr().out)
    assert abs(blob["max_ratio"] - 1.0) < 1e-9


def test_demo_convergence(capsys):
    rc = main(["demo-convergence", "--k", "1", "--depth", "10", "--json"])
    assert rc == 0
    blob = json.loads(capsys.readouterr().out)
    assert blob["depth"] == 10


def test_dichotomy_error_exit_code(capsys):
    rc = main(["construct", "--k", "1", "--steps", "1", "--filtration", "accum:1/2"])
    assert rc == 2
    assert "measure zero" in capsys.readouterr().err
