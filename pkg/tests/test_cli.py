import json
import os

import pytest
from click.testing import CliRunner

from emocl.cli import cli, main
from emocl.corpus import save_corpus
from emocl.synth import SynthConfig, generate

from conftest import SIX_ANGLES, SIX_LABELS, make_dataset

STATS_SCHEMA = {
    "type": "object",
    "required": ["conversations", "utterances", "histogram", "classes", "avg_utt"],
    "properties": {
        "conversations": {"type": "object"},
        "utterances": {"type": "object"},
        "histogram": {"type": "object"},
        "classes": {"type": "integer"},
        "avg_utt": {"type": "number"},
    },
}

SCORE_SCHEMA = {
    "type": "object",
    "required": ["conversation_id", "score", "n_es", "n_u", "n_sp"],
    "properties": {
        "score": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "n_es": {"type": "integer"},
        "n_u": {"type": "integer"},
        "n_sp": {"type": "integer"},
    },
}


@pytest.fixture
def corpus_path(tmp_path):
    from emocl.wheel import build_wheel

    config = SynthConfig(
        labels=SIX_LABELS,
        neutral="neutral",
        wheel=build_wheel(SIX_ANGLES, SIX_LABELS, "neutral"),
        n_train=10,
        n_val=3,
        n_test=3,
        p_shift=0.4,
        seed=21,
    )
    path = tmp_path / "corpus.jsonl"
    save_corpus(generate(config), str(path))
    return str(path)


@pytest.fixture
def wheel_path(tmp_path):
    path = tmp_path / "wheel.json"
    path.write_text(json.dumps({**SIX_ANGLES, "neutral": "neutral"}))
    return str(path)


def run(args):
    return CliRunner().invoke(cli, args, catch_exceptions=False)


def test_no_arguments_usage_exit_1():
    assert main([]) == 1


def test_unknown_subcommand_exit_1():
    assert main(["frobnicate"]) == 1


def test_data_error_exit_2(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"type":"utt"}\n')
    assert main(["stats", str(bad)]) == 2


def test_stats_output(corpus_path, tmp_path):
    out = tmp_path / "stats.json"
    result = run(["stats", corpus_path, "--out", str(out)])
    assert result.exit_code == 0
    assert "train" in result.output
    doc = json.loads(out.read_text())
    import jsonschema

    jsonschema.validate(doc, STATS_SCHEMA)


def test_score_records_schema(corpus_path, tmp_path):
    out = tmp_path / "scores.jsonl"
    result = run(["score", corpus_path, "--out", str(out)])
    assert result.exit_code == 0
    import jsonschema

    lines = out.read_text().strip().splitlines()
    assert len(lines) == 10
    for line in lines:
        jsonschema.validate(json.loads(line), SCORE_SCHEMA)


def test_plan_three_singleton_buckets(tmp_path):
    ds = make_dataset([["joyA", "joyA"], ["joyA", "joyB"], ["joyA", "joyB", "joyA"]],
                      SIX_LABELS, neutral="neutral")
    path = tmp_path / "three.jsonl"
    save_corpus(ds, str(path))
    out = tmp_path / "plan.json"
    result = run(["plan", str(path), "--k", "3", "--out", str(out)])
    assert result.exit_code == 0
    doc = json.loads(out.read_text())
    assert [len(b) for b in doc["buckets"]] == [1, 1, 1]
    assert len(doc["entropy_curve"]) == 3


def test_plan_entropy_csv(corpus_path, tmp_path):
    csv_path = tmp_path / "entropy.csv"
    result = run(["plan", corpus_path, "--k", "2", "--csv", str(csv_path)])
    assert result.exit_code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "babystep,entropy"
    assert len(lines) == 3


def test_simmatrix_table(wheel_path):
    result = run(["simmatrix", wheel_path, "joyA,joyB,neutral", "--neutral", "neutral"])
    assert result.exit_code == 0
    assert "similarity matrix:" in result.output
    assert "0.8660" in result.output  # cos 30 deg between the confusable pair


def test_synth_roundtrip(tmp_path, wheel_path):
    cfg = {
        "labels": list(SIX_LABELS),
        "neutral": "neutral",
        "wheel": SIX_ANGLES,
        "n_train": 6,
        "n_val": 2,
        "n_test": 2,
        "p_shift": [0.1, 0.9],
        "seed": 3,
    }
    cfg_path = tmp_path / "synth.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "synth.jsonl"
    result = run(["synth", "--config", str(cfg_path), "--out", str(out)])
    assert result.exit_code == 0
    result = run(["stats", str(out)])
    assert result.exit_code == 0


def train_args(corpus_path, run_dir, wheel_path, **kw):
    args = ["train", corpus_path, "--wheel", wheel_path, "--out", run_dir, "--k", "2",
            "--epochs-per-step", "1", "--extra-epochs", "1", "--hash-dim", "8",
            "--hidden", "4", "--seed", "5"]
    for key, val in kw.items():
        args += [f"--{key.replace('_', '-')}", str(val)]
    return args


def test_train_run_dir_contents(corpus_path, wheel_path, tmp_path):
    run_dir = str(tmp_path / "run1")
    result = run(train_args(corpus_path, run_dir, wheel_path))
    assert result.exit_code == 0
    for name in ("manifest.json", "config.json", "trainlog.jsonl", "curves.csv",
                 "model.json"):
        assert os.path.exists(os.path.join(run_dir, name)), name
    manifest = json.loads(open(os.path.join(run_dir, "manifest.json")).read())
    assert manifest["subcommand"] == "train"
    assert manifest["seed"] == 5
    assert corpus_path in manifest["inputs"]
    header = open(os.path.join(run_dir, "curves.csv")).readline().strip()
    assert header == "step,babystep,loss,offdiag_mass,entropy"


def test_train_refuses_existing_run_dir(corpus_path, wheel_path, tmp_path):
    run_dir = str(tmp_path / "run2")
    assert run(train_args(corpus_path, run_dir, wheel_path)).exit_code == 0
    assert main(train_args(corpus_path, run_dir, wheel_path)) == 2
    assert run(train_args(corpus_path, run_dir, wheel_path) + ["--force"]).exit_code == 0


def test_train_deterministic_logs(corpus_path, wheel_path, tmp_path):
    dir_a, dir_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert run(train_args(corpus_path, dir_a, wheel_path)).exit_code == 0
    assert run(train_args(corpus_path, dir_b, wheel_path)).exit_code == 0
    log_a = open(os.path.join(dir_a, "trainlog.jsonl")).read()
    log_b = open(os.path.join(dir_b, "trainlog.jsonl")).read()
    assert log_a == log_b
    assert open(os.path.join(dir_a, "model.json")).read() == open(
        os.path.join(dir_b, "model.json")).read()


def test_eval_report(corpus_path, wheel_path, tmp_path):
    run_dir = str(tmp_path / "run3")
    assert run(train_args(corpus_path, run_dir, wheel_path)).exit_code == 0
    result = run(["eval", run_dir, corpus_path, "--split", "test"])
    assert result.exit_code == 0
    assert "weighted-F1" in result.output
    assert "ES:" in result.output and "N-ES:" in result.output


def test_report_renders_figures(corpus_path, wheel_path, tmp_path):
    run_dir = str(tmp_path / "run4")
    assert run(train_args(corpus_path, run_dir, wheel_path)).exit_code == 0
    result = run(["report", run_dir])
    assert result.exit_code == 0
    assert os.path.exists(os.path.join(run_dir, "curves.png"))


def test_compare_table_and_order_independence(corpus_path, wheel_path, tmp_path):
    out_dir = str(tmp_path / "cmp")
    result = run(["compare", corpus_path, "--wheel", wheel_path, "--seeds", "2", "--k", "2",
                  "--epochs-per-step", "1", "--extra-epochs", "1",
                  "--hash-dim", "8", "--hidden", "4", "--out", out_dir])
    assert result.exit_code == 0
    for name in ("random_baseline", "cc_only", "uc_only", "hcl", "ccf", "ucf"):
        assert name in result.output
    rows = open(os.path.join(out_dir, "compare.csv")).read().strip().splitlines()
    assert rows[0] == "strategy,seed,test_weighted_f1"
    assert len(rows) == 1 + 6 * 2
    # aggregation is order independent: recompute means from shuffled rows
    import random
    import statistics

    body = [r.split(",") for r in rows[1:]]
    random.Random(0).shuffle(body)
    summary = json.loads(open(os.path.join(out_dir, "summary.json")).read())
    for strategy in summary:
        scores = [float(f1) for st, _, f1 in body if st == strategy]
        assert statistics.fmean(scores) == pytest.approx(summary[strategy]["mean"])
    # comparison figure renders from the summary
    result = run(["report", out_dir])
    assert result.exit_code == 0
    assert os.path.exists(os.path.join(out_dir, "compare.png"))
