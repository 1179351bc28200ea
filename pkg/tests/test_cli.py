import io
import json
import os
import subprocess
import sys

import pytest

from meanineq.cli import main


def run(*args):
    out = io.StringIO()
    code = main(list(args), out=out)
    return code, out.getvalue()


@pytest.mark.parametrize("args,expected", [
    (["eval", "--mean", "C", "--r", "2", "--a", "1", "--b", "3"], "2.5"),
    (["eval", "--mean", "L", "--r", "inf", "--a", "1", "--b", "3"], "3"),
    (["eval", "--mean", "L", "--r", "0.5", "--a", "4", "--b", "4"], "4"),
    (["eval", "--mean", "G", "--p", "-1", "--q", "1", "--a", "4", "--b", "9"], "6"),
    (["eval", "--mean", "E", "--p", "2", "--q", "1", "--a", "1", "--b", "3"], "2"),
])
def test_eval(args, expected):
    code, out = run(*args)
    assert code == 0
    assert out.strip() == expected


def test_eval_digits_follow_precision():
    _, lo = run("eval", "--mean", "L", "--r", "1", "--a", "1", "--b", "2", "--prec", "64")
    _, hi = run("eval", "--mean", "L", "--r", "1", "--a", "1", "--b", "2", "--prec", "512")
    assert lo.strip().startswith("1.4715177646")
    assert len(hi.strip()) > len(lo.strip()) + 100


def test_precision_env_var(monkeypatch):
    monkeypatch.setenv("MEANINEQ_PREC", "64")
    _, out = run("eval", "--mean", "L", "--r", "1", "--a", "1", "--b", "2")
    assert len(out.strip()) < 20
    monkeypatch.setenv("MEANINEQ_PREC", "lots")
    assert run("eval", "--mean", "L", "--r", "1", "--a", "1", "--b", "2")[0] == 2


@pytest.mark.parametrize("args", [
    ["eval", "--mean", "L", "--a", "1", "--b", "2"],
    ["eval", "--mean", "L", "--r", "1", "--a", "-1", "--b", "2"],
    ["eval", "--mean", "Q", "--r", "1", "--a", "1", "--b", "2"],
    ["limits", "--which", "quartic", "--r", "0.5"],
    ["scan", "--family", "G", "--r", "1"],
    ["check"],
    ["check", "--suite", "NOPE"],
    ["check", "--id", "CONJ-1", "--r", "0", "--a", "1", "--b", "2"],
    ["frobnicate"],
    [],
])
def test_usage_errors(args):
    assert run(*args)[0] == 2


def test_certify_g(tmp_path):
    path = tmp_path / "g.json"
    code, out = run("certify", "--target", "G", "--out", str(path))
    assert code == 0
    assert "closed form matched=True" in out
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["spec"] == "G" and data["ok"] is True
    assert data["manifest"]["command"][:2] == ["certify", "--target"]


def test_certify_w_summary(tmp_path):
    path = tmp_path / "w.json"
    code, out = run("certify", "--target", "W", "--out", str(path))
    assert code == 0
    stage_lines = [ln for ln in out.splitlines() if ln.startswith("W") and "(r,0)" in ln.split(":")[0]]
    assert len(stage_lines) == 27
    assert path.read_bytes().endswith(b"\n") and b"\r\n" not in path.read_bytes()


def test_certify_unwritable_path(tmp_path):
    assert run("certify", "--target", "G", "--out", str(tmp_path / "missing" / "x.json"))[0] == 3


def test_limits_quartic():
    code, out = run("limits", "--which", "quartic", "--r", "2", "--a", "1")
    assert code == 0
    assert "1/240" in out and "deviation" in out


def test_limits_report(tmp_path):
    path = tmp_path / "lim.json"
    code, _ = run("limits", "--which", "all", "--report", str(path))
    assert code == 0
    data = json.loads(path.read_text(encoding="utf-8"))
    assert [x["which"] for x in data["results"]] == ["quartic", "quadratic", "product"]


def test_scan_g_prints_brackets():
    code, out = run("scan", "--family", "G", "--r", "2", "--grid", "512")
    assert code == 0
    assert "G5: single-crossing crossings [" in out
    assert "G7: negative" in out


def test_scan_f1(tmp_path):
    code, out = run("scan", "--family", "F1", "--r", "2", "--grid", "64", "--report", str(tmp_path / "s.json"))
    assert code == 0
    assert "sign change in b" in out


def test_check_single_instance():
    code, out = run("check", "--id", "CONJ-A", "--r", "1", "--a", "1", "--b", "2")
    assert code == 0
    assert "holds" in out


def test_check_report_reproducible(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        code, _ = run("check", "--suite", "CONJ-A,PROD-C", "--samples", "30", "--seed", "3", "--report", str(p))
        assert code == 0
    a, b = (json.loads(p.read_text(encoding="utf-8")) for p in paths)
    for d in (a, b):
        d.pop("timing")
        d["manifest"].pop("started")
        d["manifest"].pop("finished")
        # the command differs only in the report path
        assert d["manifest"].pop("command")[-1].endswith(".json")
    assert a == b
    assert a["manifest"]["seed"] == 3


def test_check_reports_failure_exit_code(monkeypatch):
    from meanineq import cli
    from meanineq.suite import IdResult, SuiteReport

    def fake(config, ids, **kw):
        return SuiteReport(config.seed, {"adversarialSamples": 0}, {"CONJ-A": IdResult("CONJ-A", 0, 1, 0, -1.0)})

    monkeypatch.setattr(cli, "run_suite", fake)
    assert run("check", "--suite", "CONJ-A", "--samples", "1")[0] == 1


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "meanineq.cli", "eval", "--mean", "C", "--r", "0",
                           "--a", "1", "--b", "3"], capture_output=True, text=True,
                          env={**os.environ, "PYTHONIOENCODING": "utf-8"})
    assert proc.returncode == 0
    assert proc.stdout.strip() == "2"
