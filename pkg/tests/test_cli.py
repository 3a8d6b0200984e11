"""CLI round trips through synth, analyze, eval, and reanalyze."""

import json
import os

import pytest

from dysfluent.cli import main


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.setenv("UDM_STORE", str(tmp_path / "store"))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run(*argv):
    return main(list(argv))


def synth(workdir, seed):
    out_dir = workdir / "corpus"
    assert run("synth", "--seed", str(seed), "--out-dir", str(out_dir)) == 0
    stem = out_dir / f"case_{seed:04d}"
    return stem.with_suffix(".wav"), stem.with_suffix(".spec.json"), out_dir / f"case_{seed:04d}.gold.json"


def test_synth_writes_case_files(workdir):
    wav, spec, gold = synth(workdir, 7)
    assert wav.exists() and spec.exists() and gold.exists()
    manifest = (workdir / "corpus" / "manifest.jsonl").read_text().splitlines()
    assert len(manifest) == 1
    entry = json.loads(manifest[0])
    assert entry["seed"] == 7
    assert entry["transcript"]
    gold_doc = json.loads(gold.read_text())
    assert set(gold_doc) == {"events", "alignment"}


def test_synth_accepts_explicit_spec(workdir, capsys):
    wav, spec, _ = synth(workdir, 7)
    respec = workdir / "respec.json"
    respec.write_text(spec.read_text())
    assert run("synth", "--seed", "7", "--spec", str(respec), "--out-dir", str(workdir / "again")) == 0
    original = wav.read_bytes()
    regenerated = (workdir / "again" / "case_0007.wav").read_bytes()
    assert regenerated == original


def test_analyze_eval_reanalyze_round_trip(workdir, capsys):
    wav, spec, gold = synth(workdir, 7)
    transcript = json.loads(
        (workdir / "corpus" / "manifest.jsonl").read_text().splitlines()[0]
    )["transcript"]
    report_path = workdir / "report.json"
    svg_path = workdir / "report.svg"
    capsys.readouterr()
    assert run(
        "analyze", "--audio", str(wav), "--transcript", transcript,
        "--out", str(report_path), "--svg", str(svg_path),
    ) == 0
    report_id = capsys.readouterr().out.strip()
    assert report_id

    report = json.loads(report_path.read_text())
    assert report["report_id"] == report_id
    assert report["version"] == 1
    assert svg_path.read_text().startswith("<svg")
    store_files = os.listdir(workdir / "store")
    assert f"{report_id}_v0001.json" in store_files

    assert run("eval", "--pred", str(report_path), "--gold", str(gold)) == 0
    scores = json.loads(capsys.readouterr().out)
    assert scores["f1"] == 1.0
    assert scores["aer_percent"] is not None
    assert scores["aer_percent"] <= 20.0

    tight = workdir / "tight.json"
    tight.write_text(json.dumps({"sensitivity": {c: 1.0 for c in report["config"]["thresholds"]["sensitivity"]}}))
    assert run("reanalyze", "--report", report_id, "--thresholds", str(tight)) == 0
    updated = json.loads(capsys.readouterr().out)
    assert updated["version"] == 2
    assert updated["events"] == []

    loose = workdir / "loose.json"
    loose.write_text(json.dumps({"sensitivity": {c: 0.1 for c in report["config"]["thresholds"]["sensitivity"]}}))
    assert run("reanalyze", "--report", report_id, "--thresholds", str(loose)) == 0
    relaxed = json.loads(capsys.readouterr().out)
    assert relaxed["version"] == 3
    assert len(relaxed["events"]) >= len(report["events"])


def test_eval_without_alignment_skips_aer(workdir, capsys):
    pred = workdir / "pred.json"
    gold = workdir / "gold.json"
    pred.write_text(json.dumps([["prolongation", 0.0, 1.0]]))
    gold.write_text(json.dumps({"events": [["prolongation", 0.05, 1.05]]}))
    capsys.readouterr()
    assert run("eval", "--pred", str(pred), "--gold", str(gold)) == 0
    scores = json.loads(capsys.readouterr().out)
    assert scores["f1"] == 1.0
    assert scores["aer_percent"] is None


def test_corrupt_audio_exits_2(workdir, capsys):
    bad = workdir / "bad.wav"
    bad.write_bytes(b"RIFFnot a wav")
    code = run(
        "analyze", "--audio", str(bad), "--transcript", "ba da",
        "--out", str(workdir / "r.json"),
    )
    assert code == 2
    assert "error[frontend]" in capsys.readouterr().err


def test_missing_file_exits_2(workdir, capsys):
    code = run(
        "analyze", "--audio", str(workdir / "absent.wav"), "--transcript", "ba",
        "--out", str(workdir / "r.json"),
    )
    assert code == 2
    assert "error[io]" in capsys.readouterr().err


def test_unknown_report_exits_2(workdir, capsys):
    th = workdir / "th.json"
    th.write_text(json.dumps({"open_set_threshold": 0.5}))
    assert run("reanalyze", "--report", "missing", "--thresholds", str(th)) == 2
    assert "error[report]" in capsys.readouterr().err
