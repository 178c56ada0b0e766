import json
from pathlib import Path

import pytest

from dbubble.cli import main, replay
from dbubble.standard import equal_volume_oracle

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_classify_sphere(capsys):
    code, out, _ = run(["classify", "--dim", 3, "--H", 1, "--F", 0], capsys)
    assert code == 0 and out.strip() == "Sphere"


def test_standard_equal_volumes(tmp_path, capsys):
    out = tmp_path / "b.json"
    code, _, _ = run(["standard", "--dim", 3, "--v1", 1, "--v2", 1, "--out", out, "--svg", tmp_path / "b.svg"], capsys)
    assert code == 0
    d = json.loads(out.read_text())
    assert d["flat_interface"] is True
    r1, _, r2 = d["radii"]
    assert r1 == r2
    assert r1 == pytest.approx(equal_volume_oracle(1.0)[0], rel=1e-10)
    assert d["manifest"]["outputs"]["b.svg"]


def test_trace_csv_and_replay(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    code, out, _ = run(["trace", "--dim", 3, "--H", 1, "--F", 0, "--length", 4, "--events", "axis", "--out", a / "c.csv"], capsys)
    assert code == 0
    info = json.loads(out)
    assert info["class"] == "Sphere" and info["event"] == "axis"
    assert replay(info["manifest"], b) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["manifest"] == info["manifest"]
    assert (a / "c.csv").read_bytes() == (b / "c.csv").read_bytes()


def test_trace_start_option(tmp_path, capsys):
    code, out, _ = run(["trace", "--dim", 4, "--H", 0.5, "--start=-1,1,0.3", "--length", 2, "--out", tmp_path / "c.csv"], capsys)
    assert code == 0
    first = (tmp_path / "c.csv").read_text().splitlines()[1].split(",")
    assert float(first[1]) == -1.0


def test_verify_deterministic(tmp_path, capsys):
    argv = ["verify", "--suite", "lemmas", "--samples", 5, "--seed", 1, "--dims", "3-4"]
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        code, _, _ = run(argv + ["--out", tmp_path / d / "report.json"], capsys)
        assert code == 0
    a, b = ((tmp_path / d / "report.json").read_bytes() for d in "ab")
    assert a == b
    assert json.loads(a)["counterexamples"] == 0


def test_realize_audit_chain(tmp_path, capsys):
    cfg = tmp_path / "config.json"
    code, _, _ = run(["realize", "--config", CONFIGS / "torus_1p1.json", "--out", cfg], capsys)
    assert code == 0
    rec = json.loads(cfg.read_text())
    assert rec["summary"]["max_residual"] < 1e-8
    outs = []
    for d in ("a1", "a2"):
        (tmp_path / d).mkdir()
        code, _, _ = run(["audit", "--config", cfg, "--out", tmp_path / d / "audit.json"], capsys)
        assert code == 1  # findings present
        outs.append((tmp_path / d / "audit.json").read_bytes())
    assert outs[0] == outs[1]
    assert "cross-arc-separating" in json.loads(outs[0])["rules"]


def test_audit_standard_clean(tmp_path, capsys):
    cfg = tmp_path / "s.json"
    assert run(["realize", "--config", CONFIGS / "standard.json", "--out", cfg], capsys)[0] == 0
    code, _, _ = run(["audit", "--config", cfg, "--out", tmp_path / "a.json"], capsys)
    assert code == 0
    assert json.loads((tmp_path / "a.json").read_text())["ok"] is True


def test_no_convergence_exit(tmp_path, capsys):
    code, _, err = run(["realize", "--config", CONFIGS / "torus_1p1.json", "--out", tmp_path / "c.json", "--max-iter", 1], capsys)
    assert code == 1
    e = json.loads(err)
    assert e["error"] == "NoConvergence" and e["best_residual"] > 1e-8


def test_render_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    run(["realize", "--config", CONFIGS / "standard.json", "--out", cfg], capsys)
    code, _, _ = run(["render", "--in", cfg, "--svg", tmp_path / "c.svg"], capsys)
    assert code == 0
    assert "cap:left" in (tmp_path / "c.svg").read_text()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["classify", "--dim", "3", "--H", "1"],
        ["trace", "--dim", "3", "--H", "1", "--F", "0", "--start", "0,1,0", "--length", "1", "--out", "x.csv"],
        ["trace", "--dim", "3", "--H", "1", "--F", "0", "--length", "1", "--events", "bogus", "--out", "x.csv"],
        ["audit", "--config", "missing.json", "--out", "a.json"],
    ],
)
def test_usage_errors(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(argv, capsys)
    assert code == 2
    assert json.loads(err)["exit_code"] == 2


def test_domain_error_exit(capsys):
    code, _, err = run(["classify", "--dim", 2, "--H", 1, "--F", 0], capsys)
    assert code == 1
    assert json.loads(err)["error"] == "DomainError"
