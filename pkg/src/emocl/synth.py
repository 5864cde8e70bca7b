"""Synthetic conversational corpora with controllable shift rate and confusability.

Label sequences follow a two-parameter Markov chain: stay on the current
label with probability 1 - p_shift, otherwise jump uniformly to one of
the other labels. Tokens are synthetic ("t<k>"): each label owns a
disjoint integer vocabulary, and a configurable fraction of every
utterance's tokens is drawn from a pool shared with the label's
wheel-nearest neighbour, which makes wheel-similar labels genuinely hard
to tell apart. Speakers rotate round-robin.

Everything is a pure function of the config seed: per-conversation
generators are spawned from one SeedSequence, so the same config always
produces a byte-identical corpus file.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from emocl.corpus import Conversation, Dataset, Utterance
from emocl.errors import DataError
from emocl.wheel import EmotionWheel, nearest_label, similarity


@dataclass
class SynthConfig:
    labels: tuple[str, ...]
    neutral: str | None = None
    wheel: EmotionWheel | None = None  # defaults to default_wheel(labels)
    n_train: int = 100
    n_val: int = 20
    n_test: int = 40
    utterances: tuple[int, int] = (4, 12)
    speakers: tuple[int, int] = (2, 3)
    p_shift: float = 0.3
    confusability: float = 0.0
    vocab_size: int = 50
    tokens: tuple[int, int] = (3, 8)
    seed: int = 0
    name: str = "synth"

    def validated(self) -> "SynthConfig":
        if not self.labels:
            raise DataError("label set is empty")
        if not 0.0 <= self.p_shift <= 1.0:
            raise DataError(f"p_shift must be in [0,1], got {self.p_shift}")
        if not 0.0 <= self.confusability <= 1.0:
            raise DataError(f"confusability must be in [0,1], got {self.confusability}")
        for name, (lo, hi) in (("utterances", self.utterances),
                               ("speakers", self.speakers), ("tokens", self.tokens)):
            if lo < 1 or hi < lo:
                raise DataError(f"empty {name} range ({lo}, {hi})")
        if self.vocab_size < 1:
            raise DataError("vocab_size must be >= 1")
        return self


def _vocabularies(config: SynthConfig, wheel: EmotionWheel):
    """Per-label token pools plus shared pools for wheel-confusable pairs."""
    own: dict[str, list[str]] = {}
    base = 0
    for lab in config.labels:
        own[lab] = [f"t{base + k}" for k in range(config.vocab_size)]
        base += config.vocab_size
    shared: dict[str, list[str]] = {}
    pair_pool: dict[frozenset, list[str]] = {}
    for lab in config.labels:
        near = nearest_label(wheel, lab)
        if near is None or similarity(wheel, lab, near) <= 0:
            continue
        key = frozenset((lab, near))
        if key not in pair_pool:
            pair_pool[key] = [f"t{base + k}" for k in range(config.vocab_size)]
            base += config.vocab_size
        shared[lab] = pair_pool[key]
    return own, shared


def _gen_conversation(
    config: SynthConfig,
    wheel: EmotionWheel,
    own: dict[str, list[str]],
    shared: dict[str, list[str]],
    conv_id: str,
    rng: np.random.Generator,
) -> Conversation:
    labels = list(config.labels)
    n_utt = int(rng.integers(config.utterances[0], config.utterances[1] + 1))
    n_spk = int(rng.integers(config.speakers[0], config.speakers[1] + 1))
    speakers = [f"p{i + 1}" for i in range(n_spk)]

    label = labels[int(rng.integers(len(labels)))]
    utts = []
    for i in range(n_utt):
        if i > 0 and rng.random() < config.p_shift:
            others = [lab for lab in labels if lab != label]
            label = others[int(rng.integers(len(others)))]
        n_tok = int(rng.integers(config.tokens[0], config.tokens[1] + 1))
        pool_shared = shared.get(label)
        tokens = []
        for _ in range(n_tok):
            if pool_shared is not None and rng.random() < config.confusability:
                pool = pool_shared
            else:
                pool = own[label]
            tokens.append(pool[int(rng.integers(len(pool)))])
        utts.append(
            Utterance(
                id=f"u{i}",
                speaker=speakers[i % n_spk],
                text=" ".join(tokens),
                label=label,
            )
        )
    return Conversation.from_utterances(conv_id, utts)


def generate(config: SynthConfig) -> Dataset:
    config = config.validated()
    wheel = config.wheel
    if wheel is None:
        from emocl.wheel import default_wheel

        wheel = default_wheel(config.labels, config.neutral)
    own, shared = _vocabularies(config, wheel)

    counts = {"train": config.n_train, "val": config.n_val, "test": config.n_test}
    total = sum(counts.values())
    seeds = np.random.SeedSequence(config.seed).spawn(total)
    dataset = Dataset(
        name=config.name, label_set=config.labels, neutral_label=config.neutral
    )
    seed_idx = 0
    for split, n in counts.items():
        convs = []
        for i in range(n):
            rng = np.random.default_rng(seeds[seed_idx])
            seed_idx += 1
            convs.append(_gen_conversation(config, wheel, own, shared, f"{split}-c{i:04d}", rng))
        if convs:
            dataset.splits[split] = convs
    return dataset


def sweep_pshift(configs: list[SynthConfig]) -> Dataset:
    """Concatenate per-p_shift batches into one dataset.

    Conversation ids are prefixed with the batch's p_shift so the
    difficulty spectrum stays traceable. All configs must share the label
    set and neutral label.
    """
    if not configs:
        raise DataError("sweep_pshift needs at least one config")
    first = configs[0].validated()
    merged = Dataset(name=first.name, label_set=first.labels, neutral_label=first.neutral)
    for config in configs:
        config = config.validated()
        if config.labels != first.labels or config.neutral != first.neutral:
            raise DataError("sweep configs must share the label set")
        part = generate(config)
        prefix = f"p{config.p_shift:.2f}-"
        for split, convs in part.splits.items():
            renamed = [
                Conversation(prefix + c.id, c.utterances, c.participants) for c in convs
            ]
            merged.splits.setdefault(split, []).extend(renamed)
    return merged
