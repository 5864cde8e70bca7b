from __future__ import annotations

import pytest

from emocl.corpus import Conversation, Dataset, Utterance
from emocl.wheel import build_wheel

# angles chosen so exactly two label pairs are wheel-confusable:
# (joyA, joyB) and (gloomA, gloomB), both at cos 30 deg; tense sits 90+ deg
# from everything with its valence sign, and neutral has no angle.
SIX_LABELS = ("joyA", "joyB", "gloomA", "gloomB", "tense", "neutral")
SIX_ANGLES = {"joyA": 20.0, "joyB": 50.0, "gloomA": 200.0, "gloomB": 230.0, "tense": 110.0}


def make_conversation(conv_id, labels, speakers=None, texts=None):
    n = len(labels)
    if speakers is None:
        speakers = ["p1" if i % 2 == 0 else "p2" for i in range(n)]
    if texts is None:
        texts = [f"tok{i}" for i in range(n)]
    utts = [
        Utterance(id=f"u{i}", speaker=speakers[i], text=texts[i], label=labels[i])
        for i in range(n)
    ]
    return Conversation.from_utterances(conv_id, utts)


def make_dataset(train_label_rows, label_set, neutral=None, val=None, test=None):
    ds = Dataset(name="fixture", label_set=tuple(label_set), neutral_label=neutral)
    ds.splits["train"] = [
        make_conversation(f"c{i}", labels) for i, labels in enumerate(train_label_rows)
    ]
    if val:
        ds.splits["val"] = [make_conversation(f"v{i}", labels) for i, labels in enumerate(val)]
    if test:
        ds.splits["test"] = [make_conversation(f"t{i}", labels) for i, labels in enumerate(test)]
    return ds


@pytest.fixture
def six_label_wheel():
    return build_wheel(SIX_ANGLES, SIX_LABELS, "neutral")
