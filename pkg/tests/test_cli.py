import json

import numpy as np
import pytest

from foldplan.cli import main
from foldplan.cp import flat_state
from foldplan.dataset import (
    CorpusConfig,
    Tier,
    build_expert,
    diagonal_pattern,
    invalid_vertex_fixtures,
)
from foldplan.jsonio import (
    pattern_to_dict,
    read_json,
    state_to_dict,
    write_json,
)


@pytest.fixture(scope="module")
def cli_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = CorpusConfig(per_step=4, plan=(
        ("DIAGONAL", {}, "SIMPLE", 8),
        ("BOOK_FOLD", {}, "SIMPLE", 8),
        ("RADIAL", {"d": 4}, "INTERMEDIATE", 10),
    ))
    write_json(root / "cfg.json", cfg.to_dict())
    assert main(["gen-data", "--out", str(root / "corpus"), "--seed", "2",
                 "--config", str(root / "cfg.json")]) == 0
    return root


def test_usage_error_unknown_flag():
    assert main(["verify", "--bogus"]) == 2


def test_usage_error_unknown_command():
    assert main(["transmogrify"]) == 2


def test_gen_data_writes_manifest(cli_corpus):
    manifest = read_json(cli_corpus / "corpus" / "manifest.json")
    assert manifest["n_programs"] == 26
    run = read_json(cli_corpus / "corpus" / "run.manifest.json")
    assert run["command"] == "gen-data"
    assert run["seeds"] == {"seed": 2}


def test_train_policy_and_wm(cli_corpus):
    assert main(["train-policy", "--corpus", str(cli_corpus / "corpus"),
                 "--out", str(cli_corpus / "policy.json")]) == 0
    assert main(["train-wm", "--corpus", str(cli_corpus / "corpus"),
                 "--out", str(cli_corpus / "wm.json"),
                 "--epochs", "30", "--limit", "400"]) == 0
    assert (cli_corpus / "policy.json.manifest.json").exists()
    assert (cli_corpus / "wm.json.manifest.json").exists()


def test_eval_wm(cli_corpus, capsys):
    assert main(["eval-wm", "--corpus", str(cli_corpus / "corpus"),
                 "--wm", str(cli_corpus / "wm.json"), "--limit", "200"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"auc", "mse", "n_records"}


def test_plan_evaluate_and_svg(cli_corpus, tmp_path):
    prog = build_expert(diagonal_pattern("V"), Tier.SIMPLE)
    write_json(tmp_path / "cp.json", pattern_to_dict(prog.pattern.pattern))
    write_json(tmp_path / "goal.json", prog.goal.to_dict())
    (tmp_path / "preds").mkdir()
    (tmp_path / "refs").mkdir()
    write_json(tmp_path / "refs" / "t.json",
               {"actions": [a.to_dict() for a in prog.actions]})
    code = main(["plan", "--cp", str(tmp_path / "cp.json"),
                 "--goal", str(tmp_path / "goal.json"),
                 "--policy", str(cli_corpus / "policy.json"),
                 "--wm", str(cli_corpus / "wm.json"),
                 "--seed", "0",
                 "--out", str(tmp_path / "preds" / "t.json"),
                 "--svg-dir", str(tmp_path / "svgs")])
    assert code == 0
    traj = read_json(tmp_path / "preds" / "t.json")
    assert traj["success"] is True
    n_svgs = len(list((tmp_path / "svgs").glob("*.svg")))
    assert n_svgs == len(traj["steps"]) + 1

    assert main(["evaluate", "--pred", str(tmp_path / "preds"),
                 "--ref", str(tmp_path / "refs"),
                 "--out", str(tmp_path / "report.json")]) == 0
    report = read_json(tmp_path / "report.json")
    assert 0.0 <= report["f1"] <= 1.0
    assert report["traj_sr"] == 1.0

    assert main(["export-svg", "--trajectory",
                 str(tmp_path / "preds" / "t.json"),
                 "--out", str(tmp_path / "svgs2")]) == 0


def test_verify_ok(tmp_path):
    write_json(tmp_path / "cp.json", pattern_to_dict(diagonal_pattern()))
    assert main(["verify", "--cp", str(tmp_path / "cp.json")]) == 0


def test_verify_invalid_state(tmp_path, capsys):
    pat, state, reason = invalid_vertex_fixtures(1, seed=0)[0]
    write_json(tmp_path / "cp.json", pattern_to_dict(pat))
    write_json(tmp_path / "state.json", state_to_dict(state))
    code = main(["verify", "--cp", str(tmp_path / "cp.json"),
                 "--state", str(tmp_path / "state.json")])
    assert code == 1
    assert reason.value in capsys.readouterr().err


def test_verify_invalid_pattern_file(tmp_path):
    doc = pattern_to_dict(diagonal_pattern())
    write_json(tmp_path / "bad.json", {**doc, "edges": [[0, 0]]})
    assert main(["verify", "--cp", str(tmp_path / "bad.json")]) == 1


def test_export_svg_requires_source(tmp_path):
    assert main(["export-svg", "--out", str(tmp_path / "x.svg")]) == 2
