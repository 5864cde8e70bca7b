"""Reference classifier: hashed context features, one hidden layer, exact grads.

This is the plug-in target for the curriculum harness. Features are a
hashed bag of tokens for the utterance and its predecessor plus a
speaker-change indicator; the network is d -> h (tanh) -> r with softmax
output, trained by plain SGD on the soft-target cross-entropy
loss = -sum_batch sum_k target[k] * log p[k].

Token hashing uses FNV-1a 64-bit so feature vectors are identical across
runs and platforms (Python's builtin hash is salted per process).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from emocl.corpus import Utterance
from emocl.errors import DataError

CHECKPOINT_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass
class ModelParams:
    w1: np.ndarray  # (h, d)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (r, h)
    b2: np.ndarray  # (r,)

    @property
    def dims(self) -> tuple[int, int, int]:
        h, d = self.w1.shape
        r = self.w2.shape[0]
        return d, h, r

    def copy(self) -> "ModelParams":
        return ModelParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


def init_params(d: int, h: int, r: int, rng: np.random.Generator) -> ModelParams:
    """Weights uniform in [-0.1, 0.1], biases zero."""
    return ModelParams(
        w1=rng.uniform(-0.1, 0.1, size=(h, d)),
        b1=np.zeros(h),
        w2=rng.uniform(-0.1, 0.1, size=(r, h)),
        b2=np.zeros(r),
    )


def _hashed_bow(text: str, hash_dim: int) -> np.ndarray:
    vec = np.zeros(hash_dim)
    for token in text.split():
        vec[fnv1a64(token) % hash_dim] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def featurize(utterance: Utterance, prev: Utterance | None, hash_dim: int) -> np.ndarray:
    """Feature vector: [own block | prev block | speaker-change indicator].

    Each block is a hashed, L2-normalized bag of tokens of size hash_dim,
    unless the utterance carries precomputed features, which replace its
    block (and must match hash_dim so the total dimension stays fixed).
    """
    if hash_dim < 1:
        raise DataError(f"hash_dim must be >= 1, got {hash_dim}")

    def block(u: Utterance | None) -> np.ndarray:
        if u is None:
            return np.zeros(hash_dim)
        if u.features is not None:
            if len(u.features) != hash_dim:
                raise DataError(
                    f"precomputed feature dim {len(u.features)} != hash_dim {hash_dim}"
                )
            return np.asarray(u.features, dtype=float)
        return _hashed_bow(u.text, hash_dim)

    changed = 1.0 if prev is not None and prev.speaker != utterance.speaker else 0.0
    return np.concatenate([block(utterance), block(prev), [changed]])


def featurize_conversation(conversation, hash_dim: int) -> np.ndarray:
    """(n, 2*hash_dim + 1) feature matrix for a whole conversation."""
    rows = []
    prev = None
    for utt in conversation.utterances:
        rows.append(featurize(utt, prev, hash_dim))
        prev = utt
    return np.stack(rows)


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Softmax class distribution; accepts a single vector or a batch."""
    single = x.ndim == 1
    X = np.atleast_2d(x)
    d = params.dims[0]
    if X.shape[1] != d:
        raise DataError(f"input dim {X.shape[1]} != model dim {d}")
    z = np.tanh(X @ params.w1.T + params.b1)
    logits = z @ params.w2.T + params.b2
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if single else p


def loss_and_grad(
    params: ModelParams, batch: list[tuple[np.ndarray, np.ndarray]]
) -> tuple[float, ModelParams]:
    """Summed soft-target cross-entropy over the batch and its exact gradient.

    Each target must be row-stochastic; with one-hot targets this is the
    ordinary negative log-likelihood.
    """
    if not batch:
        raise DataError("empty batch")
    X = np.stack([x for x, _ in batch])
    T = np.stack([t for _, t in batch])
    if np.any(T < -1e-12) or np.any(np.abs(T.sum(axis=1) - 1.0) > 1e-9):
        raise DataError("target rows must be nonnegative and sum to 1")

    z = np.tanh(X @ params.w1.T + params.b1)
    logits = z @ params.w2.T + params.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    P = e / e.sum(axis=1, keepdims=True)
    logP = shifted - np.log(e.sum(axis=1, keepdims=True))
    loss = float(-(T * logP).sum())

    dlogits = P - T  # rows of T sum to 1
    dz = (dlogits @ params.w2) * (1.0 - z * z)
    grads = ModelParams(
        w1=dz.T @ X,
        b1=dz.sum(axis=0),
        w2=dlogits.T @ z,
        b2=dlogits.sum(axis=0),
    )
    return loss, grads


def sgd_step(params: ModelParams, grads: ModelParams, lr: float) -> ModelParams:
    if lr < 0:
        raise DataError(f"learning rate must be >= 0, got {lr}")
    return ModelParams(
        w1=params.w1 - lr * grads.w1,
        b1=params.b1 - lr * grads.b1,
        w2=params.w2 - lr * grads.w2,
        b2=params.b2 - lr * grads.b2,
    )


def save_checkpoint(params: ModelParams, seed: int, path: str) -> None:
    """Versioned JSON checkpoint; floats round-trip exactly via repr."""
    d, h, r = params.dims
    doc = {
        "version": CHECKPOINT_VERSION,
        "d": d,
        "h": h,
        "r": r,
        "seed": seed,
        "w1": params.w1.tolist(),
        "b1": params.b1.tolist(),
        "w2": params.w2.tolist(),
        "b2": params.b2.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str) -> tuple[ModelParams, int]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version {doc.get('version')!r}")
    params = ModelParams(
        w1=np.array(doc["w1"]),
        b1=np.array(doc["b1"]),
        w2=np.array(doc["w2"]),
        b2=np.array(doc["b2"]),
    )
    if not all(np.isfinite(a).all() for a in (params.w1, params.b1, params.w2, params.b2)):
        raise DataError("checkpoint contains non-finite parameters")
    return params, int(doc["seed"])
