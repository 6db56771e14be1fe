import json

import pytest

from caucus.cli import FAILED, OK, USAGE, main
from caucus.records import dumps, loads


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "honest10.cfg"
    p.write_text("n = 5\nrounds = 60\ngroup = toy\nadversaries = 1\nstrategy = withholder\n")
    return p


def last_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


def test_simulate_twice_identical(tmp_path, cfg):
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--seed", "42", "--out", str(tmp_path / d)]) == OK
    for name in ("metrics.csv", "events.jsonl", "beacon.csv", "summary.jsonl", "disclosures.jsonl", "transcript.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_replay_and_tamper(tmp_path, cfg, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == OK
    capsys.readouterr()
    assert main(["replay", str(out / "events.jsonl")]) == OK
    assert json.loads(capsys.readouterr().out)["status"] == "match"
    assert main(["replay", str(out / "transcript.jsonl")]) == OK
    capsys.readouterr()

    records = loads((out / "events.jsonl").read_text())
    idx = next(k for k, r in enumerate(records) if r["kind"] in ("winner", "round-skipped") and r["round"] == 20)
    R = records[idx]["R"]
    records[idx]["R"] = ("1" if R[0] != "1" else "2") + R[1:]
    bad = tmp_path / "bad.jsonl"
    bad.write_text(dumps(records))
    assert main(["replay", str(bad)]) == FAILED
    err = last_error(capsys)
    assert err["kind"] == "error" and err["round"] == 20


def test_audit_verb(tmp_path, cfg, capsys):
    out = tmp_path / "run"
    main(["simulate", "--config", str(cfg), "--out", str(out)])
    summary = json.loads(capsys.readouterr().out)
    report = tmp_path / "audit.jsonl"
    assert main(["audit", "--events", str(out / "events.jsonl"), "--disclosures", str(out / "disclosures.jsonl"),
                 "--out", str(report)]) == OK
    assert json.loads(capsys.readouterr().out)["findings"] == summary["withheld"]
    assert loads(report.read_text())[0]["kind"] == "audit"


def test_grind_verb(capsys):
    assert main(["grind", "--seed", "1", "--trials", "200"]) == OK
    out = json.loads(capsys.readouterr().out)
    assert out["k"] == 11 and out["m_best"] >= 0 and out["expected_trials"] == pytest.approx(1 / out["alpha"])


def test_keygen_and_ceremony(tmp_path, capsys):
    assert main(["keygen", "--group", "toy", "--seed", "3", "--out", str(tmp_path)]) == OK
    rec = loads((tmp_path / "key.jsonl").read_text())[0]
    assert rec["group"] == "toy" and len(rec["pk"]) == 4
    roster = tmp_path / "roster.csv"
    roster.write_text("index,seed,behavior\n1,1,online\n2,2,online\n3,3,offline\n")
    assert main(["ceremony", "--roster", str(roster), "--group", "toy", "--out", str(tmp_path)]) == OK
    roster.write_text("index,seed,behavior\n1,1,online\n2,2,offline\n3,3,offline\n4,4,offline\n")
    capsys.readouterr()
    assert main(["ceremony", "--roster", str(roster), "--group", "toy", "--out", str(tmp_path)]) == FAILED
    assert last_error(capsys)["error"] == "verification"


def test_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == USAGE
    assert "missing.cfg" in last_error(capsys)["message"]
    bad = tmp_path / "bad.cfg"
    bad.write_text("n = 3\nadvesaries = 1\n")
    assert main(["simulate", "--config", str(bad)]) == USAGE
    assert "advesaries" in last_error(capsys)["message"]
    assert main(["frobnicate"]) == USAGE
    assert main(["simulate", "--seed", "-4"]) == USAGE
    junk = tmp_path / "junk.jsonl"
    junk.write_text("not json\n")
    assert main(["replay", str(junk)]) == USAGE
    roster = tmp_path / "r.csv"
    roster.write_text("index,seed\n2,1\n")
    assert main(["ceremony", "--roster", str(roster), "--group", "toy"]) == USAGE
