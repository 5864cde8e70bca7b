"""Conversation data model, line-delimited corpus loader, validation, stats.

A corpus file is UTF-8 text with one JSON object per line. The first record
is a header declaring the dataset name, the canonical label set and the
optional neutral label; every following record is one utterance assigned to
a split and a conversation. Utterance order within a conversation is the
file order. Labels are matched case-sensitively against the header's label
set; normalization (happy vs joy etc.) is the caller's job.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from emocl.errors import CorpusFormatError, DataError

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker: str
    text: str
    label: str
    features: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Conversation:
    id: str
    utterances: tuple[Utterance, ...]
    participants: frozenset[str]

    @classmethod
    def from_utterances(cls, conv_id: str, utterances: Iterable[Utterance]) -> "Conversation":
        utts = tuple(utterances)
        if not utts:
            raise DataError(f"conversation {conv_id!r} has no utterances")
        return cls(conv_id, utts, frozenset(u.speaker for u in utts))

    def __len__(self) -> int:
        return len(self.utterances)

    def labels(self) -> list[str]:
        return [u.label for u in self.utterances]


@dataclass
class Dataset:
    name: str
    label_set: tuple[str, ...]
    neutral_label: str | None
    splits: dict[str, list[Conversation]] = field(default_factory=dict)

    def split(self, name: str) -> list[Conversation]:
        return self.splits.get(name, [])

    def all_conversations(self) -> Iterator[tuple[str, Conversation]]:
        for split in SPLITS:
            for conv in self.splits.get(split, []):
                yield split, conv


@dataclass
class Violation:
    severity: str  # "error" | "warning"
    location: str
    message: str


@dataclass
class DatasetStats:
    conversations: dict[str, int]
    utterances: dict[str, int]
    histogram: dict[str, dict[str, int]]
    classes: int
    avg_utt: float

    def total_conversations(self) -> int:
        return sum(self.conversations.values())

    def total_utterances(self) -> int:
        return sum(self.utterances.values())


def parse_dataset(stream: IO[str]) -> Dataset:
    """Parse a line-delimited corpus file into a Dataset.

    Single pass over the stream; utterance order is preserved exactly.
    Raises CorpusFormatError (with a line number) on malformed records,
    unknown labels, unknown splits, or duplicate conversation ids.
    """
    header = None
    label_set: set[str] = set()
    # split -> conv id -> list of utterances, insertion-ordered
    pending: dict[str, dict[str, list[Utterance]]] = {s: {} for s in SPLITS}
    counters: dict[tuple[str, str], int] = {}
    last_conv: dict[str, str] = {}

    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid JSON ({exc.msg})", lineno) from exc
        if not isinstance(record, dict) or "type" not in record:
            raise CorpusFormatError("record must be an object with a 'type' key", lineno)

        if record["type"] == "header":
            if header is not None:
                raise CorpusFormatError("duplicate header record", lineno)
            try:
                labels = list(record["labels"])
                header = Dataset(
                    name=str(record["name"]),
                    label_set=tuple(str(x) for x in labels),
                    neutral_label=record.get("neutral"),
                )
            except KeyError as exc:
                raise CorpusFormatError(f"header missing key {exc}", lineno) from exc
            label_set = set(header.label_set)
            if header.neutral_label is not None and header.neutral_label not in label_set:
                raise CorpusFormatError(
                    f"neutral label {header.neutral_label!r} not in label set", lineno
                )
            continue

        if record["type"] != "utt":
            raise CorpusFormatError(f"unknown record type {record['type']!r}", lineno)
        if header is None:
            raise CorpusFormatError("utterance record before header", lineno)
        try:
            split = record["split"]
            conv_id = str(record["conv"])
            speaker = str(record["speaker"])
            text = str(record["text"])
            label = str(record["label"])
        except KeyError as exc:
            raise CorpusFormatError(f"utterance missing key {exc}", lineno) from exc
        if split not in SPLITS:
            raise CorpusFormatError(f"unknown split {split!r}", lineno)
        if label not in label_set:
            raise CorpusFormatError(
                f"label {label!r} not in declared label set", lineno
            )
        features = None
        if record.get("features") is not None:
            features = tuple(float(x) for x in record["features"])
        key = (split, conv_id)
        bucket = pending[split]
        if conv_id not in bucket:
            bucket[conv_id] = []
        elif last_conv.get(split) != conv_id:
            # utterances of a conversation must be contiguous in their split;
            # a reappearing id after another conversation started is a duplicate
            raise CorpusFormatError(f"duplicate conversation id {conv_id!r}", lineno)
        last_conv[split] = conv_id
        idx = counters.get(key, 0)
        counters[key] = idx + 1
        utt_id = str(record.get("id", f"u{idx}"))
        bucket[conv_id].append(Utterance(utt_id, speaker, text, label, features))

    if header is None:
        raise CorpusFormatError("corpus has no header record")

    for split in SPLITS:
        convs = [
            Conversation.from_utterances(cid, utts)
            for cid, utts in pending[split].items()
        ]
        if convs:
            header.splits[split] = convs
    return header


def serialize_dataset(dataset: Dataset, stream: IO[str]) -> None:
    """Write the corpus file format; parse(serialize(d)) == d."""
    head = {
        "type": "header",
        "name": dataset.name,
        "labels": list(dataset.label_set),
        "neutral": dataset.neutral_label,
    }
    stream.write(json.dumps(head) + "\n")
    for split, conv in dataset.all_conversations():
        for utt in conv.utterances:
            record = {
                "type": "utt",
                "split": split,
                "conv": conv.id,
                "id": utt.id,
                "speaker": utt.speaker,
                "text": utt.text,
                "label": utt.label,
            }
            if utt.features is not None:
                record["features"] = list(utt.features)
            stream.write(json.dumps(record) + "\n")


def load_corpus(path: str) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh)


def save_corpus(dataset: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        serialize_dataset(dataset, fh)


def validate(dataset: Dataset) -> list[Violation]:
    """Check type invariants; returns violations as data, never raises.

    Single-speaker conversations are flagged as warnings only: the usual
    setting is m >= 2, but monologues are accepted.
    """
    out: list[Violation] = []
    labels = set(dataset.label_set)
    if dataset.neutral_label is not None and dataset.neutral_label not in labels:
        out.append(Violation("error", "header", "neutral label not in label set"))

    feature_dim: int | None = None
    seen_plain = False
    for split, conv in dataset.all_conversations():
        loc = f"{split}/{conv.id}"
        speakers = set(u.speaker for u in conv.utterances)
        if speakers != set(conv.participants):
            out.append(Violation("error", loc, "participants do not match utterance speakers"))
        if len(conv.participants) == 1:
            out.append(Violation("warning", loc, "single-speaker conversation (m=1)"))
        for utt in conv.utterances:
            uloc = f"{loc}/{utt.id}"
            if utt.label not in labels:
                out.append(Violation("error", uloc, f"label {utt.label!r} not in label set"))
            if utt.speaker not in conv.participants:
                out.append(Violation("error", uloc, f"speaker {utt.speaker!r} not a participant"))
            if utt.features is None:
                seen_plain = True
                if not utt.text:
                    out.append(Violation("error", uloc, "empty text without feature vector"))
            else:
                if any(not math.isfinite(x) for x in utt.features):
                    out.append(Violation("error", uloc, "non-finite feature value"))
                if feature_dim is None:
                    feature_dim = len(utt.features)
                elif len(utt.features) != feature_dim:
                    out.append(
                        Violation("error", uloc, f"feature dim {len(utt.features)} != {feature_dim}")
                    )
    if feature_dim is not None and seen_plain:
        out.append(Violation("error", "dataset", "mixed featured and feature-less utterances"))

    for split, convs in dataset.splits.items():
        ids = [c.id for c in convs]
        for cid, count in Counter(ids).items():
            if count > 1:
                out.append(Violation("error", split, f"duplicate conversation id {cid!r}"))
    return out


def stats(dataset: Dataset) -> DatasetStats:
    """Per-split counts and class histograms; avg_utt to 2 decimals."""
    conv_counts: dict[str, int] = {}
    utt_counts: dict[str, int] = {}
    histogram: dict[str, dict[str, int]] = {}
    for split in SPLITS:
        convs = dataset.splits.get(split)
        if not convs:
            continue
        conv_counts[split] = len(convs)
        utt_counts[split] = sum(len(c) for c in convs)
        hist = Counter(u.label for c in convs for u in c.utterances)
        histogram[split] = dict(hist)
    total_convs = sum(conv_counts.values())
    if total_convs == 0:
        raise DataError("empty dataset")
    avg = round(sum(utt_counts.values()) / total_convs, 2)
    return DatasetStats(
        conversations=conv_counts,
        utterances=utt_counts,
        histogram=histogram,
        classes=len(dataset.label_set),
        avg_utt=avg,
    )
