import json
import shutil
from pathlib import Path

import pytest

from appcontest.cli import main

MINI = Path(__file__).parent / "fixtures" / "mini"


@pytest.fixture
def mini(tmp_path):
    for name in ("config.json", "reviews.jsonl", "microblogs.jsonl", "downloads.jsonl"):
        shutil.copy(MINI / name, tmp_path / name)
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_missing_input_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"inputs": {"reviews": "nope.jsonl"}}))
    assert run("featurize", "--config", cfg) == 2
    assert "missing file" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert run("featurize", "--config", tmp_path / "absent.json") == 2


def test_unknown_config_field_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"forest": {"trees": 5}}))
    assert run("train", "--config", cfg) == 2
    assert "forest.trees" in capsys.readouterr().err


def test_bad_subset_exits_2(mini):
    assert run("featurize", "--config", mini / "config.json", "--subset", "XF") == 2


def test_invalid_line_strict_and_lenient(mini):
    with open(mini / "reviews.jsonl", "a") as fh:
        fh.write("{not json\n")
    out = mini / "out"
    assert run("featurize", "--config", mini / "config.json", "--out", out, "--strict") == 2
    assert run("featurize", "--config", mini / "config.json", "--out", out) == 0
    report = json.loads((out / "featurize.json").read_text())
    (issue,) = report["invalid_lines"]
    assert "reviews" in json.dumps(issue)


def test_featurize_is_byte_identical(mini):
    a, b = mini / "a", mini / "b"
    assert run("featurize", "--config", mini / "config.json", "--out", a) == 0
    assert run("featurize", "--config", mini / "config.json", "--out", b) == 0
    for name in ("features.csv", "labels.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "features.csv").read_text().startswith("# config_hash=")


def test_report_needs_evaluate(mini):
    assert run("report", "--config", mini / "config.json", "--out", mini / "o") == 2


def test_stages_chain_and_report(mini, capsys):
    cfg = mini / "fast.json"
    raw = json.loads((mini / "config.json").read_text())
    raw.update(forest={"n_trees": 5}, eval={"ablations": False})
    cfg.write_text(json.dumps(raw))
    out = mini / "o"
    for stage in ("featurize", "train", "evaluate", "report"):
        assert run(stage, "--config", cfg, "--out", out) == 0, stage
    table = json.loads((out / "report.json").read_text())["table"]
    assert [row["configuration"] for row in table] == ["RF[CF+FF]", "DT[CF+FF]", "Last"]
    assert all(row["folds"] == 4 for row in table)
    assert "RF[CF+FF]" in capsys.readouterr().out
    forest = json.loads((out / "forest.json").read_text())
    assert forest["config_hash"] == table[0].get("config_hash", forest["config_hash"])


def test_synth_then_evaluate_paper_scale(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "paper_scale", "forest": {"n_trees": 3},
                               "eval": {"ablations": False}}))
    out = tmp_path / "out"
    assert run("synth", "--config", cfg, "--out", out) == 0
    assert run("featurize", "--config", cfg, "--out", out) == 0
    assert run("evaluate", "--config", cfg, "--out", out, "--seed", 3) == 0
    ev = json.loads((out / "eval.json").read_text())
    assert ev["windows"] == 38
    assert len(ev["reports"][0]["folds"]) == 28
