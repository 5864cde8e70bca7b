"""Training harness: the curriculum strategy family on the reference classifier.

Strategies:
  random_baseline  shuffled conversations, one-hot targets
  cc_only          baby-step buckets, one-hot targets
  uc_only          all data from the start, decaying soft targets
  hcl              baby-step buckets with soft targets re-seeded per bucket
  ccf              cc_only's bucket phase, then a soft-target phase on all data
  ucf              the same two phases in reverse order

Every strategy consumes exactly the same optimizer-step budget (one step =
one conversation batch), computed from the hcl schedule, so ablation
comparisons are budget-fair. All randomness flows from one seeded
generator; identical configs produce bitwise-identical training logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import IO

import numpy as np

from emocl.corpus import Dataset
from emocl.curriculum import (
    CurriculumPlan,
    EscState,
    build_plan,
    esc_update,
    label_entropy,
    mean_offdiag_mass,
)
from emocl.errors import DataError
from emocl.model import (
    ModelParams,
    featurize_conversation,
    forward,
    init_params,
    loss_and_grad,
    sgd_step,
)
from emocl.wheel import EmotionWheel, normalize_rows, similarity_matrix

STRATEGIES = ("random_baseline", "cc_only", "uc_only", "hcl", "ccf", "ucf")


@dataclass
class TrainConfig:
    strategy: str = "hcl"
    k: int = 5
    epochs_per_step: int = 1
    extra_epochs: int = 1
    epsilon: float = 0.75
    delta_t: int = 1
    lr: float = 0.1
    seed: int = 0
    hash_dim: int = 64
    hidden: int = 32
    shift_mode: str = "any"
    esc_reset_per_step: bool = True

    def validated(self) -> "TrainConfig":
        if self.strategy not in STRATEGIES:
            raise DataError(f"unknown strategy {self.strategy!r}")
        if self.k < 1:
            raise DataError("k must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise DataError("epsilon must be in (0, 1)")
        if self.delta_t < 1:
            raise DataError("delta_t must be >= 1")
        if self.epochs_per_step < 0 or self.extra_epochs < 0:
            raise DataError("epoch counts must be >= 0")
        return self


@dataclass
class StepRecord:
    step: int
    babystep: int
    loss: float
    offdiag_mass: float
    entropy: float


@dataclass
class TrainLog:
    records: list[StepRecord] = field(default_factory=list)
    final_metrics: dict[str, float] = field(default_factory=dict)

    def to_jsonl(self, stream: IO[str]) -> None:
        for rec in self.records:
            stream.write(json.dumps(asdict(rec)) + "\n")
        stream.write(json.dumps({"final_metrics": self.final_metrics}) + "\n")

    @classmethod
    def from_jsonl(cls, stream: IO[str]) -> "TrainLog":
        log = cls()
        for line in stream:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "final_metrics" in doc:
                log.final_metrics = doc["final_metrics"]
            else:
                log.records.append(StepRecord(**doc))
        return log


@dataclass
class _Phase:
    conv_ids: list[str]
    steps: int
    esc: bool
    reset_target: bool
    babystep: int


def one_hot_row(label: str, labels: tuple[str, ...]) -> np.ndarray:
    if label not in labels:
        raise DataError(f"unknown label {label!r}")
    row = np.zeros(len(labels))
    row[labels.index(label)] = 1.0
    return row


def target_row_for(label: str, labels: tuple[str, ...], esc_state: EscState | None) -> np.ndarray:
    """The training target for a gold label: soft row while ESC is active, else one-hot."""
    if esc_state is None:
        return one_hot_row(label, labels)
    return esc_state.target.row(label)


def _phases_for(strategy: str, plan: CurriculumPlan, config: TrainConfig,
                all_ids: list[str]) -> list[_Phase]:
    n_total = len(all_ids)
    cumulative: list[str] = []
    bucket_phases: list[tuple[list[str], int, int]] = []
    for s, bucket in enumerate(plan.buckets, start=1):
        cumulative = cumulative + bucket
        bucket_phases.append((cumulative, config.epochs_per_step * len(cumulative), s))
    bucket_steps = sum(steps for _, steps, _ in bucket_phases)
    extra_steps = config.extra_epochs * n_total
    budget = bucket_steps + extra_steps

    def cc_phases(esc: bool) -> list[_Phase]:
        return [
            _Phase(ids, steps, esc, esc and (config.esc_reset_per_step or s == 1), s)
            for ids, steps, s in bucket_phases
        ]

    if strategy == "hcl":
        return cc_phases(True) + [_Phase(all_ids, extra_steps, True, False, plan.k)]
    if strategy == "cc_only":
        return cc_phases(False) + [_Phase(all_ids, extra_steps, False, False, plan.k)]
    if strategy == "uc_only":
        return [_Phase(all_ids, budget, True, True, 0)]
    if strategy == "random_baseline":
        return [_Phase(all_ids, budget, False, False, 0)]
    if strategy == "ccf":
        return cc_phases(False) + [_Phase(all_ids, extra_steps, True, True, 0)]
    if strategy == "ucf":
        return [_Phase(all_ids, extra_steps, True, True, 0)] + cc_phases(False)
    raise DataError(f"unknown strategy {strategy!r}")


def train(dataset: Dataset, wheel: EmotionWheel, config: TrainConfig) -> tuple[ModelParams, TrainLog]:
    config = config.validated()
    convs = dataset.split("train")
    if not convs:
        raise DataError("dataset has no training conversations")
    labels = dataset.label_set
    if not labels:
        raise DataError("dataset has an empty label set")
    missing = [lab for lab in labels if lab != wheel.neutral and lab not in wheel.entries]
    if missing:
        raise DataError(f"wheel does not cover labels {missing}")

    rng = np.random.default_rng(config.seed)
    by_id = {c.id: c for c in convs}
    features = {c.id: featurize_conversation(c, config.hash_dim) for c in convs}
    gold_rows = {c.id: [u.label for u in c.utterances] for c in convs}
    d = 2 * config.hash_dim + 1
    params = init_params(d, config.hidden, len(labels), rng)

    plan = build_plan(dataset, config.k, config.shift_mode)
    all_ids = [c.id for c in convs]
    phases = _phases_for(config.strategy, plan, config, all_ids)

    base_target = normalize_rows(similarity_matrix(wheel))
    esc_state: EscState | None = None
    log = TrainLog()
    global_step = 0

    for phase in phases:
        if phase.esc and (phase.reset_target or esc_state is None):
            esc_state = EscState(base_target.copy(), config.epsilon, config.delta_t)
        phase_entropy = label_entropy(
            [lab for cid in phase.conv_ids for lab in gold_rows[cid]]
        )
        done = 0
        while done < phase.steps:
            order = rng.permutation(len(phase.conv_ids))
            for idx in order:
                if done >= phase.steps:
                    break
                cid = phase.conv_ids[idx]
                if phase.esc:
                    # the decay fires before the training step whenever the
                    # phase-local step counter hits a delta_t multiple
                    t = esc_state.step + 1
                    if t % config.delta_t == 0:
                        esc_state = esc_update(esc_state)
                    else:
                        esc_state.step = t
                    active = esc_state
                else:
                    active = None
                X = features[cid]
                batch = [
                    (X[i], target_row_for(lab, labels, active))
                    for i, lab in enumerate(gold_rows[cid])
                ]
                loss, grads = loss_and_grad(params, batch)
                params = sgd_step(params, grads, config.lr)
                global_step += 1
                done += 1
                mass = mean_offdiag_mass(active.target) if active is not None else 0.0
                log.records.append(
                    StepRecord(global_step, phase.babystep, loss, mass, phase_entropy)
                )

    for split in ("val", "test"):
        if dataset.split(split):
            gold, pred = predict_split(params, dataset, split, config.hash_dim)
            from emocl.metrics import weighted_f1

            log.final_metrics[f"{split}_weighted_f1"] = weighted_f1(gold, pred)
    return params, log


def predict_split(
    params: ModelParams, dataset: Dataset, split: str, hash_dim: int
) -> tuple[list[str], list[str]]:
    """Gold and argmax-predicted labels for every utterance of a split, in order."""
    labels = dataset.label_set
    gold: list[str] = []
    pred: list[str] = []
    for conv in dataset.split(split):
        X = featurize_conversation(conv, hash_dim)
        P = forward(params, X)
        for i, utt in enumerate(conv.utterances):
            gold.append(utt.label)
            pred.append(labels[int(np.argmax(P[i]))])
    return gold, pred
