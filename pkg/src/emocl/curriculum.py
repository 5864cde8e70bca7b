"""Conversation difficulty scoring, baby-step bucketing, target decay.

The conversation-level difficulty score is
(shifts + speakers) / (utterances + speakers): the speaker count acts as a
smoothing factor so no conversation scores zero. Conversations are sorted
ascending by score and split into k equal-count buckets for the baby-step
scheduler. The utterance-level curriculum evolves a row-stochastic target
matrix toward the identity: each update scales off-diagonal mass by
epsilon / (1 + epsilon * S) where S is the row's off-diagonal mass, which
preserves the ratios between off-diagonal entries and contracts the mass
at least geometrically (S' <= epsilon * S).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from emocl.corpus import Conversation, Dataset
from emocl.errors import DataError
from emocl.wheel import TargetMatrix


@dataclass(frozen=True)
class DifficultyScore:
    conversation_id: str
    score: float
    n_es: int
    n_u: int
    n_sp: int


@dataclass
class CurriculumPlan:
    buckets: list[list[str]]  # conversation ids, easiest bucket first
    scores: dict[str, DifficultyScore]

    @property
    def k(self) -> int:
        return len(self.buckets)


@dataclass
class EscState:
    target: TargetMatrix
    epsilon: float
    delta_t: int
    step: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise DataError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.delta_t < 1:
            raise DataError(f"delta_t must be >= 1, got {self.delta_t}")


def emotion_shift_count(conversation: Conversation, shift_mode: str = "any") -> int:
    """Number of consecutive-utterance label changes.

    shift_mode "any" counts every consecutive pair; "inter_speaker_only"
    counts only pairs where the speaker also changed.
    """
    if shift_mode not in ("any", "inter_speaker_only"):
        raise DataError(f"unknown shift_mode {shift_mode!r}")
    count = 0
    utts = conversation.utterances
    for prev, cur in zip(utts, utts[1:]):
        if cur.label == prev.label:
            continue
        if shift_mode == "inter_speaker_only" and cur.speaker == prev.speaker:
            continue
        count += 1
    return count


def difficulty(conversation: Conversation, shift_mode: str = "any") -> DifficultyScore:
    if len(conversation) == 0:
        raise DataError(f"conversation {conversation.id!r} is empty")
    n_es = emotion_shift_count(conversation, shift_mode)
    n_u = len(conversation)
    n_sp = len(conversation.participants)
    score = (n_es + n_sp) / (n_u + n_sp)
    return DifficultyScore(conversation.id, score, n_es, n_u, n_sp)


def build_plan(dataset: Dataset, k: int, shift_mode: str = "any") -> CurriculumPlan:
    """Sort training conversations by difficulty and cut into k buckets.

    Stable sort: ties keep their input order. Equal-count split; when the
    count is not divisible by k, earlier buckets take one extra.
    """
    convs = dataset.split("train")
    if k < 1 or k > len(convs):
        raise DataError(f"k={k} out of range for {len(convs)} training conversations")
    scores = {c.id: difficulty(c, shift_mode) for c in convs}
    ordered = sorted(convs, key=lambda c: scores[c.id].score)
    n = len(ordered)
    base, extra = divmod(n, k)
    buckets: list[list[str]] = []
    pos = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        buckets.append([c.id for c in ordered[pos : pos + size]])
        pos += size
    return CurriculumPlan(buckets=buckets, scores=scores)


def esc_update(state: EscState) -> EscState:
    """One decay step of the target matrix toward one-hot.

    Per row i with off-diagonal mass S: diagonal becomes 1/(1 + eps*S),
    off-diagonal entries become eps*m / (1 + eps*S). Analytically the row
    already sums to 1; renormalization is applied anyway to cancel float
    drift.
    """
    rows = state.target.rows.copy()
    r = rows.shape[0]
    diag = np.arange(r)
    off = rows.sum(axis=1) - rows[diag, diag]
    denom = 1.0 + state.epsilon * off
    rows *= (state.epsilon / denom)[:, None]
    rows[diag, diag] = 1.0 / denom
    rows /= rows.sum(axis=1, keepdims=True)
    target = TargetMatrix(state.target.labels, rows, state.target.step + 1)
    return replace(state, target=target, step=state.step + 1)


def offdiag_mass(state: EscState, row: str) -> float:
    """Off-diagonal mass of one target row (convergence diagnostic)."""
    i = state.target.index.get(row)
    if i is None:
        raise DataError(f"unknown label {row!r}")
    vals = state.target.rows[i]
    return float(vals.sum() - vals[i])


def mean_offdiag_mass(target: TargetMatrix) -> float:
    rows = target.rows
    return float((rows.sum(axis=1) - np.diag(rows)).mean())


def label_entropy(labels: list[str]) -> float:
    """Shannon entropy in nats of a label multiset, with 0*log 0 := 0."""
    if not labels:
        return 0.0
    counts = np.array(list(Counter(labels).values()), dtype=float)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def entropy_curve(plan: CurriculumPlan, dataset: Dataset) -> list[float]:
    """Entropy of the cumulative training subset's label histogram per baby step."""
    by_id = {c.id: c for c in dataset.split("train")}
    cumulative: list[str] = []
    curve: list[float] = []
    for bucket in plan.buckets:
        for cid in bucket:
            if cid not in by_id:
                raise DataError(f"plan references unknown conversation {cid!r}")
            cumulative.extend(by_id[cid].labels())
        curve.append(label_entropy(cumulative))
    return curve
