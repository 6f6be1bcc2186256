"""One-hidden-layer ReLU classifier trained with plain SGD on soft labels."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from mixsel.rng import stream

LOG_EPS = 1e-12
CKPT_TAG = "mixsel-ckpt v1"


class NonFiniteError(FloatingPointError):
    pass


@dataclass
class Classifier:
    """Weights of a ``D -> H -> M`` MLP; ``hidden == 0`` means plain softmax regression.

    ``w1``/``b1`` are ``None`` when there is no hidden layer, in which case
    ``w2`` is ``D x M``.
    """

    w1: Optional[np.ndarray]
    b1: Optional[np.ndarray]
    w2: np.ndarray
    b2: np.ndarray

    @property
    def sizes(self) -> tuple[int, int, int]:
        if self.w1 is None:
            return self.w2.shape[0], 0, self.w2.shape[1]
        return self.w1.shape[0], self.w1.shape[1], self.w2.shape[1]

    @property
    def params(self) -> list[np.ndarray]:
        if self.w1 is None:
            return [self.w2, self.b2]
        return [self.w1, self.b1, self.w2, self.b2]

    @classmethod
    def from_params(cls, params: list[np.ndarray]) -> "Classifier":
        if len(params) == 2:
            return cls(None, None, *params)
        return cls(*params)

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params)


def init_classifier(d: int, hidden: int, m: int, seed: int) -> Classifier:
    """Glorot-uniform weights, zero biases."""
    rng = stream(seed, "init")

    def glorot(fan_in, fan_out):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-s, s, size=(fan_in, fan_out))

    if hidden == 0:
        return Classifier(None, None, glorot(d, m), np.zeros(m))
    return Classifier(glorot(d, hidden), np.zeros(hidden), glorot(hidden, m), np.zeros(m))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(clf: Classifier, x: np.ndarray):
    if clf.w1 is None:
        return None, x @ clf.w2 + clf.b2
    h = np.maximum(x @ clf.w1 + clf.b1, 0.0)
    return h, h @ clf.w2 + clf.b2


def logits(clf: Classifier, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    d = clf.sizes[0]
    if x.shape[-1] != d:
        raise ValueError(f"expected input dimension {d}, got {x.shape[-1]}")
    return _forward(clf, x)[1]


def predict_probs(clf: Classifier, x) -> np.ndarray:
    """Class-probability vector(s) for one sample or a batch of rows."""
    return _softmax(logits(clf, x))


def loss_soft_ce(p, y) -> float:
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: p {p.shape} vs y {y.shape}")
    # batch input gives the mean over rows
    return float(np.mean(-(y * np.log(p + LOG_EPS)).sum(axis=-1)))


def loss_and_grads(clf: Classifier, x: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Mean soft cross-entropy over the batch and its exact gradient.

    The gradient includes the ``LOG_EPS`` stabilizer, so it matches finite
    differences of the loss as computed, not of the idealized ``-y log p``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    b = x.shape[0]
    h, z = _forward(clf, x)
    p = _softmax(z)
    loss = float(-(y * np.log(p + LOG_EPS)).sum() / b)

    # dL/dz for L = -sum y log(p + eps), p = softmax(z)
    w = y * p / (p + LOG_EPS)
    dz = (p * w.sum(axis=1, keepdims=True) - w) / b

    if clf.w1 is None:
        return loss, [x.T @ dz, dz.sum(axis=0)]
    dw2 = h.T @ dz
    db2 = dz.sum(axis=0)
    dh = (dz @ clf.w2.T) * (h > 0)
    return loss, [x.T @ dh, dh.sum(axis=0), dw2, db2]


def sgd_step(clf: Classifier, x, y, lr: float) -> tuple[Classifier, float]:
    """One SGD step on the mean batch loss; returns the new model and the pre-update loss."""
    if lr < 0:
        raise ValueError("lr must be non-negative")
    loss, grads = loss_and_grads(clf, x, y)
    if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads):
        raise NonFiniteError(f"non-finite loss or gradient (loss={loss})")
    return Classifier.from_params([p - lr * g for p, g in zip(clf.params, grads)]), loss


@dataclass(frozen=True)
class Evaluation:
    probs: np.ndarray
    per_class_acc: np.ndarray
    accuracy: float


def evaluate(clf: Classifier, ds, rows: Optional[np.ndarray] = None) -> Evaluation:
    """Forward pass over ``ds`` (or the given rows); argmax ties go to the lowest class."""
    x, y = ds.features, ds.labels
    if rows is not None:
        x, y = x[rows], y[rows]
    probs = predict_probs(clf, x)
    pred = probs.argmax(axis=1)
    hit = pred == y
    per_class = np.array([hit[y == c].mean() if np.any(y == c) else np.nan
                          for c in range(ds.num_classes)])
    return Evaluation(probs, per_class, float(hit.mean()))


def save_checkpoint(clf: Classifier, path) -> None:
    d, h, m = clf.sizes
    lines = [CKPT_TAG, f"{d} {h} {m}"]
    for p in clf.params:
        lines.extend(repr(float(v)) for v in p.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> Classifier:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CKPT_TAG:
        raise ValueError(f"{path}: not a {CKPT_TAG!r} checkpoint")
    d, h, m = (int(v) for v in lines[1].split())
    shapes = [(d, m), (m,)] if h == 0 else [(d, h), (h,), (h, m), (m,)]
    vals = np.array([float(v) for v in lines[2:]])
    need = sum(int(np.prod(s)) for s in shapes)
    if vals.size != need:
        raise ValueError(f"{path}: expected {need} parameters, found {vals.size}")
    params, off = [], 0
    for s in shapes:
        k = int(np.prod(s))
        params.append(vals[off:off + k].reshape(s))
        off += k
    return Classifier.from_params(params)
