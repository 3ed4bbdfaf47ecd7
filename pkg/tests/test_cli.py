import json
import subprocess
import sys

import jsonschema
import pytest

from rampminer.categorization import record_schema
from rampminer.cli import main
from rampminer.extraction import Pattern, save_patterns


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("ds")
    assert main(["synth", "--out", str(d), "--seed", "3", "--n-mainline", "40", "--n-merging", "8",
                 "--n-aborting", "2"]) == 0
    return d


def _run(args):
    return main([str(a) for a in args])


def _io(ds):
    return ["--trajectories", ds / "trajectories.csv", "--lanes", ds / "lanes.json"]


def test_extract_outputs_valid_records(dataset, tmp_path):
    assert _run(["extract", *_io(dataset), "--out", tmp_path]) == 0
    lines = (tmp_path / "scenarios.jsonl").read_text().splitlines()
    assert len(lines) == 10
    schema = record_schema()
    recs = [json.loads(l) for l in lines]
    for r in recs:
        jsonschema.validate(r, schema)
    assert [r["object_id"] for r in recs] == sorted(r["object_id"] for r in recs)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_merges"] == 8 and summary["by_pattern_class"]["abort"] == 2


def test_extract_deterministic_across_workers(dataset, tmp_path):
    for w in (1, 3):
        assert _run(["extract", *_io(dataset), "--out", tmp_path / f"w{w}", "--workers", w]) == 0
    for name in ("scenarios.jsonl", "summary.json"):
        assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w3" / name).read_bytes()


def test_single_merge_gives_one_record(tmp_path):
    assert _run(["synth", "--out", tmp_path, "--n-mainline", 0, "--n-merging", 1, "--n-aborting", 0]) == 0
    assert _run(["extract", *_io(tmp_path), "--out", tmp_path / "o"]) == 0
    assert len((tmp_path / "o" / "scenarios.jsonl").read_text().splitlines()) == 1


def test_empty_input(dataset, tmp_path):
    (tmp_path / "t.csv").write_text("object_id,frame,t,x,y,heading,v,width,length,class\n")
    assert _run(["extract", "--trajectories", tmp_path / "t.csv", "--lanes", dataset / "lanes.json",
                 "--out", tmp_path / "o"]) == 0
    assert (tmp_path / "o" / "scenarios.jsonl").read_text() == ""


def test_missing_lane_file(dataset, tmp_path, capsys):
    code = _run(["extract", "--trajectories", dataset / "trajectories.csv", "--lanes", tmp_path / "no.json",
                 "--out", tmp_path])
    assert code == 1
    assert "lane file not found" in capsys.readouterr().err


def test_bad_trajectory_row(dataset, tmp_path, capsys):
    (tmp_path / "t.csv").write_text("object_id,frame,t,x,y,heading,v,width,length,class\na,0,0,0,0,0,1,1,1,bus\n")
    assert _run(["extract", "--trajectories", tmp_path / "t.csv", "--lanes", dataset / "lanes.json",
                 "--out", tmp_path]) == 1
    assert "t.csv:2" in capsys.readouterr().err


def test_invalid_flag_values(dataset, tmp_path):
    assert _run(["extract", *_io(dataset), "--out", tmp_path, "--xi", 7]) == 1
    assert _run(["extract", *_io(dataset), "--out", tmp_path, "--vicinity-m", -1]) == 1
    assert _run(["extract", *_io(dataset)]) == 1


def test_evaluate_with_labels(dataset, tmp_path, capsys):
    assert _run(["evaluate", *_io(dataset), "--labels", dataset / "labels.json", "--out", tmp_path]) == 0
    res = json.loads((tmp_path / "evaluation.json").read_text())
    assert res["accuracy"] == 1.0 and res["precision"] == 1.0 and res["misses"] == []
    assert "extracted 8 of 8 merges" in capsys.readouterr().out


def test_evaluate_without_labels_uses_road_association(dataset, tmp_path):
    assert _run(["evaluate", *_io(dataset), "--out", tmp_path]) == 0
    res = json.loads((tmp_path / "evaluation.json").read_text())
    assert res["n_ground_truth"] == 8 and res["recall"] == 1.0


def test_evaluate_disabled_classifier(dataset, tmp_path, capsys):
    save_patterns([Pattern("abort", (0, 1, 2, 1, 0), False)], tmp_path / "p.json")
    assert _run(["evaluate", *_io(dataset), "--labels", dataset / "labels.json", "--patterns",
                 tmp_path / "p.json", "--out", tmp_path]) == 0
    res = json.loads((tmp_path / "evaluation.json").read_text())
    assert res["recall"] == 0.0 and res["precision"] is None and len(res["misses"]) == 8
    out = capsys.readouterr().out
    assert "extracted 0 of 8" in out and "precision absent" in out


def test_evaluate_label_mismatch(dataset, tmp_path):
    labels = json.loads((dataset / "labels.json").read_text())
    labels["objects"]["ghost"] = {"label": "merge"}
    (tmp_path / "l.json").write_text(json.dumps(labels))
    assert _run(["evaluate", *_io(dataset), "--labels", tmp_path / "l.json", "--out", tmp_path]) == 1


def test_config_overrides_flags(dataset, tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"vicinity_m": 1e-3, "critical-s": 0.5}))
    assert _run(["extract", *_io(dataset), "--out", tmp_path, "--vicinity-m", 500, "--config", tmp_path / "c.json"]) == 0
    recs = [json.loads(l) for l in (tmp_path / "scenarios.jsonl").read_text().splitlines()]
    assert all(r["challengers"] == [] for r in recs)
    (tmp_path / "bad.json").write_text(json.dumps({"nope": 1}))
    assert _run(["extract", *_io(dataset), "--out", tmp_path, "--config", tmp_path / "bad.json"]) == 1


def test_report(dataset, tmp_path):
    assert _run(["extract", *_io(dataset), "--out", tmp_path]) == 0
    assert _run(["report", "--out", tmp_path]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["n_scenarios"] == 8
    for name in ("ecdf_start.csv", "ecdf_end.csv", "pet_hist_behind.csv", "pet_hist_in_front.csv"):
        assert (tmp_path / name).exists()
    assert _run(["report", "--out", tmp_path / "none"]) == 1


def test_synth_rejects_bad_config(tmp_path):
    assert _run(["synth", "--out", tmp_path, "--noise-std", -1]) == 1


def test_internal_error_exit_code(dataset, tmp_path, monkeypatch):
    import rampminer.cli as cli

    def boom(*a, **k):
        raise RuntimeError("kaboom")

    monkeypatch.setattr(cli, "extract_all", boom)
    assert _run(["extract", *_io(dataset), "--out", tmp_path]) == 2


def test_module_entry_point(dataset, tmp_path):
    p = subprocess.run([sys.executable, "-m", "rampminer", "extract", *map(str, _io(dataset)), "--out",
                        str(tmp_path)], capture_output=True, text=True)
    assert p.returncode == 0, p.stderr
    assert (tmp_path / "scenarios.jsonl").exists()
