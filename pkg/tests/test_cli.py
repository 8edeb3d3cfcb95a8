import csv
import io
import json
import math
from fractions import Fraction

import pytest
from click.testing import CliRunner

from latlab.cli import main, parse_ints
from latlab.fixtures import generate


@pytest.fixture()
def runner(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for name, kind, n in [("far2", "far-promise", 2), ("close2", "close-promise", 2), ("rand3", "random", 3)]:
        (tmp_path / f"{name}.json").write_text(generate(kind, n, 0).dumps())
    return CliRunner()


def invoke(runner, *args, code=0):
    res = runner.invoke(main, [str(a) for a in args])
    assert res.exit_code == code, res.output
    return res


def test_parse_ints():
    assert parse_ints("0..4") == [0, 1, 2, 3, 4]
    assert parse_ints("0..10:5,12") == [0, 5, 10, 12]


def test_tradeoff_csv_json(runner):
    res = invoke(runner, "tradeoff", "--n", "100", "--gamma", "2")
    row = next(csv.DictReader(io.StringIO(res.output)))
    want = math.log2(10 * 1000 * 0.75 ** -50.5)
    assert math.isclose(float(row["log2_gg_l2"]), want, rel_tol=1e-12)
    rows = json.loads(invoke(runner, "tradeoff", "--n", "2..6:2", "--gamma", "2,4", "--format", "json").output)
    assert len(rows) == 6
    invoke(runner, "tradeoff", "--n", "1", code=2)


def test_fixture_cmd(runner):
    res = invoke(runner, "fixture", "far-promise", "--n", "3", "--seed", "1")
    assert json.loads(res.output) == json.loads(generate("far-promise", 3, 1).dumps())
    res = invoke(runner, "fixture", "far-promise", "--n", "2", "--margin", "1.4", "--out", "m.json")
    fx = json.loads(open("m.json").read())
    assert fx["n"] == 2 and generate("far-promise", 2, 0, margin=1.4).dumps() == open("m.json").read().rstrip("\n")


def test_run_gg_far(runner):
    res = invoke(runner, "run", "gg", "--fixture", "far2.json", "--seeds", "0..9", "--rounds", "200")
    rep = json.loads(res.output)
    assert rep["rates"]["acceptance"]["rate"] == 1.0 and rep["rates"]["acceptance"]["trials"] == 10
    assert rep["config"]["seeds"] == "0..9"


def test_run_gg_transcript_jsonl(runner):
    res = invoke(runner, "run", "gg", "--fixture", "close2.json", "--merlin", "cheat", "--rounds", "20",
                 "--format", "jsonl", "--transcript", "t.jsonl")
    assert len(res.output.splitlines()) == 3
    assert len(open("t.jsonl").read().splitlines()) == 21


def test_run_conp_adversarial(runner):
    res = invoke(runner, "run", "conp", "--fixture", "close2.json", "--witness", "adversarial", "--N", "300",
                 "--seeds", "0..1")
    far = json.loads(res.output)["rates"]["far"]
    assert far["successes"] == 0 and far["trials"] >= 30


def test_run_coma_and_budget(runner):
    res = invoke(runner, "run", "coma", "--fixture", "close2.json", "--N", "300", "--trials", "50")
    assert json.loads(res.output)["rates"]["far"]["successes"] == 0
    invoke(runner, "run", "coma", "--fixture", "far2.json", "--preset", "paper", "--budget", "1", code=2)


def test_budget_refusal_prints_cost(runner):
    res = invoke(runner, "run", "conp", "--fixture", "far2.json", "--preset", "paper", "--k", "5", code=2)
    assert "refused" in res.output and "requires" in res.output
    invoke(runner, "run", "gg", "--fixture", "far2.json", "--preset", "paper", "--budget", "5", code=2)
    invoke(runner, "run", "sis", "--fixture", "far2.json", "--preset", "paper", "--budget", "10", "--s-target", "50",
           code=2)


def test_tampered_fixture(runner):
    data = json.loads(open("far2.json").read())
    data["stamps"]["lambda1_sq"] = "1"
    open("bad.json", "w").write(json.dumps(data))
    res = invoke(runner, "run", "gg", "--fixture", "bad.json", code=3)
    assert "promise violation" in res.output


def test_env_fixture_dir(runner, tmp_path, monkeypatch):
    sub = tmp_path / "fx"
    sub.mkdir()
    (sub / "x.json").write_text(generate("far-promise", 2, 3).dumps())
    monkeypatch.setenv("LATLAB_FIXTURES", str(sub))
    invoke(runner, "run", "gg", "--fixture", "x.json", "--rounds", "10")


def test_deterministic_bodies(runner):
    args = ["run", "bdd", "--fixture", "rand3.json", "--d", "3", "--gamma", "4", "--seeds", "0..2"]
    a, b = (json.loads(invoke(runner, *args).output) for _ in range(2))
    a.pop("timing"), b.pop("timing")
    assert a == b and a["parameters"]["label"] == "YES"


def test_run_gmss_and_dgs(runner):
    rep = json.loads(invoke(runner, "run", "gmss", "--fixture", "rand3.json", "--d", "100").output)
    assert rep["rates"]["yes_instances"]["successes"] >= 1 and len(rep["outcomes"]) == 3
    d = "1/64"
    assert (20 * Fraction(1, 64)) ** 2 < generate("far-promise", 2, 0).stamps["lambda1_sq"]
    rep = json.loads(invoke(runner, "run", "dgs-np", "--fixture", "far2.json", "--d", d, "--gamma", "20").output)
    assert rep["parameters"]["label"] == "NO" and rep["rates"]["yes"]["trials"] == 1
    invoke(runner, "run", "dgs-ma", "--fixture", "far2.json", "--d", d, "--gamma", "20", "--gamma-p", "2")


def test_run_sis(runner):
    invoke(runner, "run", "sis", "--fixture", "rand3.json", "--s-target", "40", code=2)
    rep = json.loads(invoke(runner, "run", "sis", "--fixture", "far2.json", "--s-target", "40", "--count", "5",
                            "--samples-out", "s.jsonl").output)
    assert rep["outcomes"][0]["fallbacks"] == 0
    assert len(open("s.jsonl").read().splitlines()) == 5
