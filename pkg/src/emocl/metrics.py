"""Evaluation metrics and analysis reports for conversational emotion labels.

Weighted-F1 (per-label F1 averaged by support share), micro-F1 with the
majority class removed from the pooled counts, the emotion-shift /
no-shift partition of a split, and per-label / label-group report tables.

Division-by-zero convention: a precision, recall, or F1 whose denominator
is zero is 0. Labels with zero gold support contribute nothing to the
weighted average.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from emocl.corpus import Conversation
from emocl.errors import DataError


@dataclass
class PartitionScore:
    f1: float
    share: float
    count: int


@dataclass
class EvalReport:
    metric_name: str
    overall: float
    per_label: dict[str, tuple[float, float]]  # label -> (F1, support share)
    partitions: dict[str, PartitionScore] = field(default_factory=dict)
    groups: dict[str, float] = field(default_factory=dict)
    degenerate: bool = False


def _check_lengths(gold, pred):
    if len(gold) != len(pred):
        raise DataError(f"gold/pred length mismatch: {len(gold)} vs {len(pred)}")
    if len(gold) == 0:
        raise DataError("empty gold/pred")


def per_label_f1(gold: list[str], pred: list[str]) -> dict[str, tuple[float, float]]:
    """label -> (F1, gold support share), for every label seen in gold or pred."""
    _check_lengths(gold, pred)
    labels = sorted(set(gold) | set(pred))
    n = len(gold)
    out: dict[str, tuple[float, float]] = {}
    for lab in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == lab and p == lab)
        fp = sum(1 for g, p in zip(gold, pred) if g != lab and p == lab)
        fn = sum(1 for g, p in zip(gold, pred) if g == lab and p != lab)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[lab] = (f1, (tp + fn) / n)
    return out


def weighted_f1(gold: list[str], pred: list[str]) -> float:
    """Support-share weighted mean of per-label F1."""
    table = per_label_f1(gold, pred)
    return sum(f1 * share for f1, share in table.values())


def micro_f1_excluding(gold: list[str], pred: list[str], excluded: str) -> float:
    """Micro-averaged F1 with `excluded` removed from the pooled counts.

    A gold-excluded / pred-non-excluded pair still counts as a false
    positive for the predicted label, and the reverse as a false negative.
    Returns 0.0 when no non-excluded label occurs at all (degenerate).
    """
    _check_lengths(gold, pred)
    tp = fp = fn = 0
    for g, p in zip(gold, pred):
        if g == p:
            if g != excluded:
                tp += 1
        else:
            if p != excluded:
                fp += 1
            if g != excluded:
                fn += 1
    if tp + fp + fn == 0:
        return 0.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def es_partition(
    conversations: list[Conversation], shift_mode: str = "any"
) -> tuple[list[tuple[str, int]], list[tuple[str, int]]]:
    """Split utterance positions into shifted (ES) and non-shifted (N-ES).

    A position is ES iff its label differs from the previous utterance in
    the same conversation; the first utterance of a conversation is N-ES.
    Positions are (conversation id, utterance index).
    """
    if shift_mode not in ("any", "inter_speaker_only"):
        raise DataError(f"unknown shift_mode {shift_mode!r}")
    es: list[tuple[str, int]] = []
    nes: list[tuple[str, int]] = []
    for conv in conversations:
        prev = None
        for i, utt in enumerate(conv.utterances):
            shifted = prev is not None and utt.label != prev.label
            if shifted and shift_mode == "inter_speaker_only" and utt.speaker == prev.speaker:
                shifted = False
            (es if shifted else nes).append((conv.id, i))
            prev = utt
    return es, nes


def group_f1(gold: list[str], pred: list[str], members: set[str]) -> float:
    """Weighted-F1 on the pairs whose gold label is in the group."""
    pairs = [(g, p) for g, p in zip(gold, pred) if g in members]
    if not pairs:
        return 0.0
    g, p = zip(*pairs)
    return weighted_f1(list(g), list(p))


def report(
    gold: list[str],
    pred: list[str],
    conversations: list[Conversation] | None = None,
    groups: dict[str, set[str]] | None = None,
    excluded_majority: str | None = None,
    shift_mode: str = "any",
    label_set: set[str] | None = None,
) -> EvalReport:
    """Full evaluation report.

    `gold`/`pred` are flat lists aligned with the utterance order of
    `conversations` (required for the ES/N-ES partition). When
    `excluded_majority` is set, the headline metric is micro-F1 excluding
    that label; otherwise weighted-F1.
    """
    _check_lengths(gold, pred)
    table = per_label_f1(gold, pred)
    known = set(table)

    if excluded_majority is not None:
        overall = micro_f1_excluding(gold, pred, excluded_majority)
        metric_name = f"micro-F1 (excl. {excluded_majority})"
        degenerate = all(g == excluded_majority for g in gold) and all(
            p == excluded_majority for p in pred
        )
    else:
        overall = weighted_f1(gold, pred)
        metric_name = "weighted-F1"
        degenerate = False

    rep = EvalReport(metric_name=metric_name, overall=overall, per_label=table,
                     degenerate=degenerate)

    if conversations is not None:
        total_utts = sum(len(c) for c in conversations)
        if total_utts != len(gold):
            raise DataError(
                f"conversations hold {total_utts} utterances but gold has {len(gold)}"
            )
        es, nes = es_partition(conversations, shift_mode)
        flat_index = {}
        pos = 0
        for conv in conversations:
            for i in range(len(conv)):
                flat_index[(conv.id, i)] = pos
                pos += 1
        for name, part in (("ES", es), ("N-ES", nes)):
            idx = [flat_index[key] for key in part]
            g = [gold[i] for i in idx]
            p = [pred[i] for i in idx]
            f1 = weighted_f1(g, p) if g else 0.0
            rep.partitions[name] = PartitionScore(f1=f1, share=len(idx) / len(gold),
                                                  count=len(idx))

    if groups:
        universe = label_set if label_set is not None else known
        for name, members in groups.items():
            unknown = set(members) - universe
            if unknown:
                raise DataError(f"group {name!r} references unknown labels {sorted(unknown)}")
            rep.groups[name] = group_f1(gold, pred, set(members))
    return rep


IEMOCAP_GROUPS = {
    "HESF": {"happy", "excited", "sad", "frustrated"},
    "NA": {"neutral", "angry"},
}
