"""Valence-arousal emotion wheel and label-similarity soft targets.

Each non-neutral label sits at an angle on the unit circle of the
valence-arousal plane (valence = cos theta, arousal = sin theta). Pairwise
similarity is the cosine of the included angle, clamped at zero, zeroed
when the two valence polarities are opposite, and fixed at 1/N between
neutral and any other label (N = total number of labels, neutral included).
Neutral's self-similarity is 1 so the true label always dominates its
target row.

The wheel geometry is configuration, not a constant: the shipped default
below follows the usual circumplex quadrant layout and covers the common
conversational-emotion label sets, and any experiment can override it with
a JSON document mapping label -> angle-in-degrees plus a "neutral" key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from emocl.errors import DataError

# Degrees, valence axis = 0. Surprise sits at 85 rather than 90 so that no
# non-neutral label has valence exactly 0: the zero-valence-product branch
# of the similarity rule is reserved for neutral.
DEFAULT_ANGLES: dict[str, float] = {
    "happy": 20.0,
    "joy": 20.0,
    "joyful": 20.0,
    "happiness": 20.0,
    "excited": 50.0,
    "excitement": 50.0,
    "powerful": 65.0,
    "surprise": 85.0,
    "surprised": 85.0,
    "scared": 115.0,
    "fear": 115.0,
    "fearful": 115.0,
    "mad": 135.0,
    "angry": 135.0,
    "anger": 135.0,
    "frustrated": 150.0,
    "frustration": 150.0,
    "disgust": 165.0,
    "disgusted": 165.0,
    "sad": 200.0,
    "sadness": 200.0,
    "peaceful": 340.0,
}

NEUTRAL_NAMES = ("neutral", "no_emotion", "none")


@dataclass(frozen=True)
class EmotionWheel:
    entries: dict[str, float]  # non-neutral label -> angle in degrees, [0, 360)
    neutral: str | None
    labels: tuple[str, ...]  # full ordered label set, neutral included

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def angle(self, label: str) -> float:
        if label not in self.entries:
            raise DataError(f"label {label!r} has no wheel angle")
        return self.entries[label]

    def valence(self, label: str) -> float:
        return math.cos(math.radians(self.angle(label)))


@dataclass(frozen=True)
class SimilarityMatrix:
    labels: tuple[str, ...]
    values: np.ndarray  # (r, r), symmetric, entries in [0, 1]


@dataclass
class TargetMatrix:
    labels: tuple[str, ...]
    rows: np.ndarray  # (r, r), row-stochastic
    step: int = 0
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {lab: i for i, lab in enumerate(self.labels)}

    def row(self, label: str) -> np.ndarray:
        if label not in self.index:
            raise DataError(f"unknown label {label!r}")
        return self.rows[self.index[label]]

    def copy(self) -> "TargetMatrix":
        return TargetMatrix(self.labels, self.rows.copy(), self.step)


def build_wheel(
    angles: dict[str, float], label_set: list[str] | tuple[str, ...], neutral: str | None
) -> EmotionWheel:
    """Build a wheel for a label set from an angle table.

    Every non-neutral label must get exactly one angle; an angle whose
    valence is exactly 0 is rejected (that similarity branch belongs to
    neutral), as is an angle assigned to the neutral label.
    """
    labels = tuple(label_set)
    if neutral is not None and neutral not in labels:
        raise DataError(f"neutral label {neutral!r} not in label set")
    if neutral is not None and neutral in angles:
        raise DataError(f"neutral label {neutral!r} must not have an angle")
    entries: dict[str, float] = {}
    for lab in labels:
        if lab == neutral:
            continue
        if lab not in angles:
            raise DataError(f"no wheel angle for label {lab!r}")
        theta = float(angles[lab]) % 360.0
        if math.isclose(math.cos(math.radians(theta)), 0.0, abs_tol=1e-12):
            raise DataError(f"label {lab!r} at {theta} deg has valence 0; reserved for neutral")
        entries[lab] = theta
    return EmotionWheel(entries=entries, neutral=neutral, labels=labels)


def default_wheel(label_set, neutral: str | None = None) -> EmotionWheel:
    """Wheel for a label set using the shipped default angles.

    If `neutral` is not given, the first label matching a known neutral
    name is used.
    """
    if neutral is None:
        neutral = next((lab for lab in label_set if lab.lower() in NEUTRAL_NAMES), None)
    return build_wheel(DEFAULT_ANGLES, label_set, neutral)


def load_wheel_config(path: str, label_set, neutral: str | None = None) -> EmotionWheel:
    """Load a wheel from a JSON file {label: degrees, ..., "neutral": label}."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise DataError("wheel config must be a JSON object")
    cfg_neutral = doc.pop("neutral", None)
    if neutral is None:
        neutral = cfg_neutral
    angles = {str(k): float(v) for k, v in doc.items()}
    return build_wheel(angles, label_set, neutral)


def similarity(wheel: EmotionWheel, i: str, j: str) -> float:
    """Pairwise label similarity in [0, 1].

    Cases: identical labels -> 1; neutral against anything else -> 1/N;
    opposite valence signs -> 0; otherwise the cosine of the included
    angle clamped at 0. The cosine is computed from the angle difference
    directly, never from reconstructed coordinates.
    """
    for lab in (i, j):
        if lab not in wheel.labels:
            raise DataError(f"unknown label {lab!r}")
    if i == j:
        return 1.0
    if i == wheel.neutral or j == wheel.neutral:
        return 1.0 / wheel.n_labels
    vi, vj = wheel.valence(i), wheel.valence(j)
    if vi * vj < 0:
        return 0.0
    theta = math.radians(wheel.angle(i) - wheel.angle(j))
    cos = math.cos(theta)
    if abs(cos) < 1e-12:  # right angles hit float noise (cos 90 deg ~ 6e-17)
        cos = 0.0
    return max(cos, 0.0)


def similarity_matrix(wheel: EmotionWheel) -> SimilarityMatrix:
    r = wheel.n_labels
    values = np.empty((r, r))
    for a, la in enumerate(wheel.labels):
        for b, lb in enumerate(wheel.labels):
            values[a, b] = similarity(wheel, la, lb)
    return SimilarityMatrix(labels=wheel.labels, values=values)


def normalize_rows(matrix: SimilarityMatrix) -> TargetMatrix:
    """Row-normalize a similarity matrix into the step-0 target matrix."""
    sums = matrix.values.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        bad = matrix.labels[int(np.argmin(sums))]
        raise DataError(f"row {bad!r} has non-positive sum; cannot normalize")
    return TargetMatrix(labels=matrix.labels, rows=matrix.values / sums, step=0)


def confusing_labels(wheel: EmotionWheel) -> set[str]:
    """Labels involved in at least one positive-similarity pair, neutral excluded."""
    out: set[str] = set()
    for a in wheel.labels:
        if a == wheel.neutral:
            continue
        for b in wheel.labels:
            if b == wheel.neutral or b == a:
                continue
            if similarity(wheel, a, b) > 0:
                out.add(a)
                break
    return out


def nearest_label(wheel: EmotionWheel, label: str) -> str | None:
    """The non-neutral label with the highest positive similarity, if any."""
    if label == wheel.neutral:
        return None
    best, best_sim = None, 0.0
    for other in wheel.labels:
        if other in (label, wheel.neutral):
            continue
        s = similarity(wheel, label, other)
        if s > best_sim:
            best, best_sim = other, s
    return best
