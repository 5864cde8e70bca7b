"""Command-line entry point wiring the library into reproducible runs.

Exit codes: 0 success, 1 usage error, 2 data error. All numeric table
output uses fixed 4-decimal formatting so golden files stay stable. Run
directories are never overwritten without --force, and every run receives
a manifest with the resolved config and input digests.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import shutil
import statistics
import sys
from dataclasses import asdict
from datetime import datetime, timezone

import click

import emocl
from emocl import corpus as corpus_mod
from emocl import curriculum as curriculum_mod
from emocl import metrics as metrics_mod
from emocl import synth as synth_mod
from emocl import wheel as wheel_mod
from emocl.errors import DataError, EmoclError
from emocl.model import load_checkpoint, save_checkpoint
from emocl.training import STRATEGIES, TrainConfig, TrainLog, predict_split, train

CURVE_COLUMNS = ("step", "babystep", "loss", "offdiag_mass", "entropy")


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(run_dir: str, subcommand: str, config: dict, inputs: dict[str, str],
                    seed: int | None) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs.values() if p},
        "tool_version": emocl.__version__,
        "seed": seed,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    with open(os.path.join(run_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


def _prepare_run_dir(path: str, force: bool) -> None:
    if os.path.exists(path):
        if not force:
            raise DataError(f"run directory {path!r} exists; pass --force to overwrite")
        shutil.rmtree(path)
    os.makedirs(path)


def _load_wheel(wheel_path: str | None, label_set, neutral):
    if wheel_path is None:
        cfg_dir = os.environ.get("EMOCL_CONFIG_DIR")
        if cfg_dir and os.path.exists(os.path.join(cfg_dir, "wheel.json")):
            wheel_path = os.path.join(cfg_dir, "wheel.json")
    if wheel_path is None or wheel_path == "default":
        return wheel_mod.default_wheel(label_set, neutral)
    return wheel_mod.load_wheel_config(wheel_path, label_set, neutral)


@click.group()
@click.version_option(emocl.__version__)
def cli():
    """Curriculum-learning harness for conversational emotion recognition."""


@cli.command("stats")
@click.argument("corpus_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the stats as JSON.")
def stats_cmd(corpus_file, out):
    """Print corpus statistics as an aligned table."""
    dataset = corpus_mod.load_corpus(corpus_file)
    st = corpus_mod.stats(dataset)
    click.echo(f"dataset: {dataset.name}  classes: {st.classes}  avg_utt: {st.avg_utt:.2f}")
    click.echo(f"{'split':<8}{'convs':>8}{'utts':>8}")
    for split in corpus_mod.SPLITS:
        if split in st.conversations:
            click.echo(f"{split:<8}{st.conversations[split]:>8}{st.utterances[split]:>8}")
    for split, hist in st.histogram.items():
        parts = ", ".join(f"{lab}: {n}" for lab, n in sorted(hist.items()))
        click.echo(f"histogram[{split}]: {parts}")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(asdict(st), fh, indent=2)


@cli.command("score")
@click.argument("corpus_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--shift-mode", type=click.Choice(["any", "inter_speaker_only"]), default="any")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write difficulty records as JSON lines.")
def score_cmd(corpus_file, shift_mode, out):
    """Emit per-conversation difficulty scores for the training split."""
    dataset = corpus_mod.load_corpus(corpus_file)
    records = [
        asdict(curriculum_mod.difficulty(conv, shift_mode))
        for conv in dataset.split("train")
    ]
    if not records:
        raise DataError("corpus has no training conversations")
    for rec in records:
        click.echo(
            f"{rec['conversation_id']:<24}{_fmt(rec['score'])}"
            f"  es={rec['n_es']} u={rec['n_u']} sp={rec['n_sp']}"
        )
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")


@cli.command("plan")
@click.argument("corpus_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, required=True, help="Number of baby-step buckets.")
@click.option("--shift-mode", type=click.Choice(["any", "inter_speaker_only"]), default="any")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the plan as JSON.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Write the entropy curve as two-column CSV.")
def plan_cmd(corpus_file, k, shift_mode, out, csv_path):
    """Build the baby-step curriculum plan and its entropy curve."""
    dataset = corpus_mod.load_corpus(corpus_file)
    plan = curriculum_mod.build_plan(dataset, k, shift_mode)
    entropies = curriculum_mod.entropy_curve(plan, dataset)
    for i, bucket in enumerate(plan.buckets, start=1):
        lo = plan.scores[bucket[0]].score
        hi = plan.scores[bucket[-1]].score
        click.echo(
            f"bucket {i}: {len(bucket)} conversations, scores {_fmt(lo)}..{_fmt(hi)}, "
            f"entropy {_fmt(entropies[i - 1])}"
        )
    if out:
        doc = {
            "buckets": plan.buckets,
            "scores": {cid: asdict(s) for cid, s in plan.scores.items()},
            "entropy_curve": entropies,
        }
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["babystep", "entropy"])
            for i, h in enumerate(entropies, start=1):
                writer.writerow([i, f"{h:.6f}"])


@cli.command("simmatrix")
@click.argument("wheel_file")
@click.argument("labels")
@click.option("--neutral", default=None, help="Neutral label (no angle).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def simmatrix_cmd(wheel_file, labels, neutral, out):
    """Print the similarity matrix and row-normalized target matrix.

    WHEEL_FILE is a JSON angle table or the word 'default'; LABELS is a
    comma-separated label list.
    """
    label_list = [lab.strip() for lab in labels.split(",") if lab.strip()]
    if not label_list:
        raise DataError("empty label list")
    wheel = _load_wheel(wheel_file, label_list, neutral)
    sim = wheel_mod.similarity_matrix(wheel)
    target = wheel_mod.normalize_rows(sim)

    width = max(8, max(len(lab) for lab in label_list) + 1)

    def table(name, matrix):
        click.echo(name)
        click.echo(" " * width + "".join(f"{lab:>{width}}" for lab in label_list))
        for i, lab in enumerate(label_list):
            row = "".join(f"{_fmt(matrix[i, j]):>{width}}" for j in range(len(label_list)))
            click.echo(f"{lab:<{width}}{row}")

    table("similarity matrix:", sim.values)
    table("target matrix (row-normalized):", target.rows)
    if out:
        doc = {
            "labels": label_list,
            "similarity": sim.values.tolist(),
            "target": target.rows.tolist(),
        }
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


@cli.command("synth")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON generator config.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output corpus file.")
def synth_cmd(config_file, out):
    """Generate a synthetic corpus.

    The config is a JSON object with SynthConfig fields; a list-valued
    "p_shift" runs a sweep and concatenates the batches. A "wheel" key may
    hold an inline angle table ({label: degrees}) or a wheel file path.
    """
    with open(config_file, encoding="utf-8") as fh:
        doc = json.load(fh)
    wheel_spec = doc.pop("wheel", None)
    if wheel_spec is not None:
        label_set = list(doc.get("labels", ()))
        neutral = doc.get("neutral")
        if isinstance(wheel_spec, dict):
            doc["wheel"] = wheel_mod.build_wheel(wheel_spec, label_set, neutral)
        else:
            doc["wheel"] = _load_wheel(str(wheel_spec), label_set, neutral)
    p_shift = doc.pop("p_shift", 0.3)
    doc["labels"] = tuple(doc.get("labels", ()))
    for key in ("utterances", "speakers", "tokens"):
        if key in doc:
            doc[key] = tuple(doc[key])
    try:
        if isinstance(p_shift, list):
            configs = [synth_mod.SynthConfig(p_shift=float(p), **doc) for p in p_shift]
            dataset = synth_mod.sweep_pshift(configs)
        else:
            dataset = synth_mod.generate(synth_mod.SynthConfig(p_shift=float(p_shift), **doc))
    except TypeError as exc:
        raise DataError(f"bad generator config: {exc}") from exc
    corpus_mod.save_corpus(dataset, out)
    st = corpus_mod.stats(dataset)
    click.echo(f"wrote {out}: {st.total_conversations()} conversations, "
               f"{st.total_utterances()} utterances")


def _train_options(fn):
    opts = [
        click.option("--wheel", "wheel_file", default=None,
                     help="Wheel config JSON (default: shipped wheel)."),
        click.option("--strategy", type=click.Choice(STRATEGIES), default="hcl"),
        click.option("--k", type=int, default=5),
        click.option("--epsilon", type=float, default=0.75),
        click.option("--delta-t", type=int, default=1),
        click.option("--epochs-per-step", type=int, default=1),
        click.option("--extra-epochs", type=int, default=1),
        click.option("--lr", type=float, default=0.1),
        click.option("--seed", type=int, default=0),
        click.option("--hash-dim", type=int, default=64),
        click.option("--hidden", type=int, default=32),
        click.option("--shift-mode", type=click.Choice(["any", "inter_speaker_only"]),
                     default="any"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(strategy, k, epsilon, delta_t, epochs_per_step, extra_epochs, lr, seed,
                  hash_dim, hidden, shift_mode) -> TrainConfig:
    return TrainConfig(
        strategy=strategy, k=k, epsilon=epsilon, delta_t=delta_t,
        epochs_per_step=epochs_per_step, extra_epochs=extra_epochs, lr=lr, seed=seed,
        hash_dim=hash_dim, hidden=hidden, shift_mode=shift_mode,
    ).validated()


def _write_run(run_dir, config: TrainConfig, params, log: TrainLog) -> None:
    with open(os.path.join(run_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(asdict(config), fh, indent=2)
    with open(os.path.join(run_dir, "trainlog.jsonl"), "w", encoding="utf-8") as fh:
        log.to_jsonl(fh)
    with open(os.path.join(run_dir, "curves.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for rec in log.records:
            writer.writerow([rec.step, rec.babystep, repr(rec.loss),
                             repr(rec.offdiag_mass), repr(rec.entropy)])
    save_checkpoint(params, config.seed, os.path.join(run_dir, "model.json"))


@cli.command("train")
@click.argument("corpus_file", type=click.Path(exists=True, dir_okay=False))
@_train_options
@click.option("--out", "run_dir", type=click.Path(file_okay=False), required=True,
              help="Run directory (refused if it exists, see --force).")
@click.option("--force", is_flag=True, help="Overwrite an existing run directory.")
def train_cmd(corpus_file, wheel_file, run_dir, force, **kwargs):
    """Train the reference classifier under a curriculum strategy."""
    dataset = corpus_mod.load_corpus(corpus_file)
    wheel = _load_wheel(wheel_file, dataset.label_set, dataset.neutral_label)
    config = _build_config(**kwargs)
    _prepare_run_dir(run_dir, force)
    params, log = train(dataset, wheel, config)
    _write_run(run_dir, config, params, log)
    _write_manifest(run_dir, "train", asdict(config),
                    {"corpus": corpus_file, "wheel": wheel_file or ""}, config.seed)
    for key, value in log.final_metrics.items():
        click.echo(f"{key}: {_fmt(value)}")
    click.echo(f"run written to {run_dir}")


@cli.command("eval")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("corpus_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test")
@click.option("--groups", "groups_name", default=None,
              help="Named label grouping; 'hesf' applies the standard "
                   "happy/excited/sad/frustrated + neutral/angry grouping.")
@click.option("--excluded", default=None,
              help="Report micro-F1 with this majority label excluded.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_cmd(run_dir, corpus_file, split, groups_name, excluded, out):
    """Evaluate a trained run on a corpus split and print the full report."""
    dataset = corpus_mod.load_corpus(corpus_file)
    convs = dataset.split(split)
    if not convs:
        raise DataError(f"corpus has no {split!r} split")
    params, _seed = load_checkpoint(os.path.join(run_dir, "model.json"))
    with open(os.path.join(run_dir, "config.json"), encoding="utf-8") as fh:
        run_config = json.load(fh)
    gold, pred = predict_split(params, dataset, split, run_config["hash_dim"])
    groups = None
    if groups_name:
        if groups_name.lower() != "hesf":
            raise DataError(f"unknown group preset {groups_name!r}")
        groups = metrics_mod.IEMOCAP_GROUPS
    rep = metrics_mod.report(
        gold, pred, conversations=convs, groups=groups, excluded_majority=excluded,
        shift_mode=run_config.get("shift_mode", "any"),
        label_set=set(dataset.label_set),
    )
    click.echo(f"{rep.metric_name}: {_fmt(rep.overall)}")
    click.echo(f"{'label':<14}{'F1':>8}{'share':>8}")
    for lab, (f1, share) in sorted(rep.per_label.items()):
        click.echo(f"{lab:<14}{_fmt(f1):>8}{_fmt(share):>8}")
    for name, part in rep.partitions.items():
        click.echo(f"{name}: F1 {_fmt(part.f1)} (share {part.share * 100:.1f}%)")
    for name, f1 in rep.groups.items():
        click.echo(f"group {name}: {_fmt(f1)}")
    if out:
        doc = {
            "metric": rep.metric_name,
            "overall": rep.overall,
            "per_label": {lab: {"f1": f1, "share": sh} for lab, (f1, sh) in rep.per_label.items()},
            "partitions": {n: asdict(p) for n, p in rep.partitions.items()},
            "groups": rep.groups,
            "degenerate": rep.degenerate,
        }
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)


@cli.command("compare")
@click.argument("corpus_file", type=click.Path(exists=True, dir_okay=False))
@_train_options
@click.option("--seeds", "n_seeds", type=int, default=5, help="Seeds per strategy.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--force", is_flag=True)
def compare_cmd(corpus_file, wheel_file, n_seeds, out_dir, force, **kwargs):
    """Run the full strategy ablation with a shared step budget.

    Trains every strategy with the same hyperparameters over --seeds seeds
    and prints a mean +- sd table of test weighted-F1.
    """
    kwargs.pop("strategy", None)
    dataset = corpus_mod.load_corpus(corpus_file)
    wheel = _load_wheel(wheel_file, dataset.label_set, dataset.neutral_label)
    base_seed = kwargs.pop("seed")
    rows = []
    for strategy in STRATEGIES:
        for s in range(n_seeds):
            config = _build_config(strategy=strategy, seed=base_seed + s, **kwargs)
            _params, log = train(dataset, wheel, config)
            rows.append((strategy, base_seed + s, log.final_metrics.get("test_weighted_f1")))
    summary = {}
    for strategy in STRATEGIES:
        scores = [f1 for st, _, f1 in rows if st == strategy and f1 is not None]
        mean = statistics.fmean(scores)
        sd = statistics.stdev(scores) if len(scores) > 1 else 0.0
        summary[strategy] = (mean, sd)
    click.echo(f"{'strategy':<18}{'mean F1':>10}{'sd':>10}")
    for strategy, (mean, sd) in summary.items():
        click.echo(f"{strategy:<18}{_fmt(mean):>10}{_fmt(sd):>10}")
    if out_dir:
        _prepare_run_dir(out_dir, force)
        with open(os.path.join(out_dir, "compare.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["strategy", "seed", "test_weighted_f1"])
            for strategy, seed, f1 in rows:
                writer.writerow([strategy, seed, repr(f1)])
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump({st: {"mean": m, "sd": sd} for st, (m, sd) in summary.items()},
                      fh, indent=2)
        _write_manifest(out_dir, "compare", {**kwargs, "seeds": n_seeds},
                        {"corpus": corpus_file, "wheel": wheel_file or ""}, base_seed)
        click.echo(f"comparison written to {out_dir}")


@cli.command("report")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
def report_cmd(run_dir):
    """Render figures for a run directory next to its delimited outputs."""
    from emocl import plots

    made = []
    log_path = os.path.join(run_dir, "trainlog.jsonl")
    if os.path.exists(log_path):
        with open(log_path, encoding="utf-8") as fh:
            log = TrainLog.from_jsonl(fh)
        made.append(plots.plot_training_curves(
            log, os.path.join(run_dir, "curves.png"), title=os.path.basename(run_dir)))
        entropies = []
        prev = None
        for rec in log.records:
            if rec.babystep != prev:
                entropies.append(rec.entropy)
                prev = rec.babystep
        if len(entropies) > 1:
            made.append(plots.plot_entropy_curve(
                entropies, os.path.join(run_dir, "entropy.png")))
    summary_path = os.path.join(run_dir, "summary.json")
    if os.path.exists(summary_path):
        with open(summary_path, encoding="utf-8") as fh:
            summary = json.load(fh)
        table = {st: (v["mean"], v["sd"]) for st, v in summary.items()}
        made.append(plots.plot_strategy_comparison(
            table, os.path.join(run_dir, "compare.png")))
    if not made:
        raise DataError(f"{run_dir!r} holds neither a training log nor a comparison summary")
    for path in made:
        click.echo(f"wrote {path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except EmoclError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
