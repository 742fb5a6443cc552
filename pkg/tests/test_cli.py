import csv
import json
import subprocess
import sys

import pytest

from hypercon import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def walk_records(obj):
    if isinstance(obj, dict):
        if "check" in obj and "ok" in obj:
            yield obj
        for v in obj.values():
            yield from walk_records(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from walk_records(v)


def test_constants_deterministic(capsys):
    args = ("constants", "c=0.5", "kappa=1", "nu=2", "M=1.5")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second
    doc = json.loads(first)
    assert doc["exit_code"] == 0 and doc["schema"] == cli.SCHEMA


def test_subprocess_entry_point():
    args = [sys.executable, "-m", "hypercon.cli", "constants", "c=0.5"]
    a = subprocess.run(args, capture_output=True, check=True).stdout
    b = subprocess.run(args, capture_output=True, check=True).stdout
    assert a == b


@pytest.mark.parametrize(
    "argv, code",
    [
        (("constants", "c=-1"), 2),
        (("constants", "M=nan"), 2),
        (("constants", "bogus=1"), 2),
        (("nosuch",), 2),
        (("eckmann", "exponential", "kappa=3"), 3),
        (("eckmann", "power", "r=2", "n=101"), 4),
        (("solve", "measure=gaussian", "potential=harmonic", "n=401"), 0),
    ],
)
def test_exit_codes(capsys, argv, code):
    got, out, err = run(capsys, *argv)
    assert got == code
    doc = json.loads(out)
    assert doc["exit_code"] == code
    if code in (2, 3):
        assert "error" in doc and err.startswith("hypercon:")


def test_records_have_fields(capsys):
    code, out, _ = run(capsys, "eckmann", "power", "r=2")
    assert code == 0
    recs = list(walk_records(json.loads(out)))
    assert recs
    for rec in recs:
        assert {"lhs", "rhs", "slack", "ok", "instance"} <= set(rec)


def test_herbst_csv(capsys, tmp_path):
    path = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "herbst", "g=linear", "points=5", "n=1001", "--csv", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "value", "bound"]
    assert len(rows) == 11


def test_csv_without_curve(capsys, tmp_path):
    code, _, _ = run(capsys, "constants", "--csv", str(tmp_path / "x.csv"))
    assert code == 2


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "constants", "params": {"c": 0.25, "M": 2.0}}))
    code, out, _ = run(capsys, "--config", str(cfg), "M=3")
    assert code == 0
    report = json.loads(out)["result"]["report"]
    assert report["c"] == 0.25 and report["M"] == 3.0


def test_config_schema_rejection(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "constants", "extra": 1}))
    assert run(capsys, "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"command": "constants", "jobs": 0}))
    assert run(capsys, "--config", str(cfg))[0] == 2


def test_infinite_allowed_only_for_kappa_nu(capsys):
    assert run(capsys, "constants", "nu=inf")[0] == 0
    assert run(capsys, "constants", "c=inf")[0] == 2


@pytest.mark.parametrize("jobs", ["1", "2"])
def test_sweep(capsys, jobs):
    code, out, _ = run(capsys, "sweep", "constants", "c=0.25,0.5", "M=1,2", "--jobs", jobs)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["results"]) == 4
    assert all(r["exit_code"] == 0 for r in doc["results"])


def test_sweep_serial_and_parallel_agree(capsys):
    outs = [run(capsys, "sweep", "constants", "c=0.25,0.5", "--jobs", j)[1] for j in ("1", "2")]
    assert outs[0] == outs[1]


def test_sweep_merges_errors(capsys):
    code, out, _ = run(capsys, "sweep", "constants", "c=0.5,-1", "--jobs", "1")
    assert code == 2
    results = json.loads(out)["results"]
    assert "error" in results[1] and results[0]["exit_code"] == 0


def test_text_format(capsys):
    code, out, _ = run(capsys, "eckmann", "power", "r=2", "n=101", "--format", "text")
    assert code == 4
    assert "FAIL wkb_closure" in out
    assert out.rstrip().splitlines()[-1].startswith("checks:")


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    assert run(capsys, "constants", "--output", str(path))[0] == 0
    assert json.loads(path.read_text())["command"] == "constants"


def test_gaussian_command(capsys):
    code, out, _ = run(capsys, "gaussian", "positive", "s=1.9,2.1")
    assert code == 0
    exps = json.loads(out)["result"]["positive"]["experiments"]
    assert [e["finite_expected"] for e in exps] == [True, False]


def test_toy_and_mr_commands(capsys):
    assert run(capsys, "eckmann", "toy", "dim=3")[0] == 0
    assert run(capsys, "eckmann", "malrieu_roberto", "beta=0.5", "n=2001")[0] == 0


def test_dumps_non_finite():
    text = cli.dumps({"a": float("inf"), "b": float("nan"), "c": 1.0, "d": 2})
    doc = json.loads(text)
    assert doc == {"a": "inf", "b": "nan", "c": 1.0, "d": 2}


def test_bad_list_is_config_error(capsys):
    assert run(capsys, "gaussian", "positive", "s=[1.9")[0] == 2
