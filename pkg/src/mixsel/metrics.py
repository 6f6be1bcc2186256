"""Expected calibration error and per-class accuracy trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CalibrationReport:
    n_bins: int
    counts: np.ndarray
    confidence: np.ndarray  # mean confidence per bin (nan when empty)
    accuracy: np.ndarray  # empirical accuracy per bin (nan when empty)
    ece: float

    def to_dict(self) -> dict:
        def clean(a):
            return [None if np.isnan(v) else float(v) for v in a]
        return {
            "n_bins": self.n_bins,
            "ece": self.ece,
            "bins": [
                {"lower": k / self.n_bins, "upper": (k + 1) / self.n_bins, "count": int(c),
                 "confidence": conf, "accuracy": acc}
                for k, (c, conf, acc) in enumerate(zip(self.counts, clean(self.confidence), clean(self.accuracy)))
            ],
        }


def ece(probs, labels, n_bins: int = 15) -> CalibrationReport:
    """Top-1 ECE over equal-width bins ``(k/B, (k+1)/B]``; confidence 0 falls in the first bin."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise ValueError("ece needs a non-empty (N, M) probability matrix")
    if labels.shape != (probs.shape[0],):
        raise ValueError("labels must have one entry per probability row")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    conf = probs.max(axis=1)
    correct = (probs.argmax(axis=1) == labels).astype(np.float64)
    bins = np.clip(np.ceil(conf * n_bins).astype(np.int64) - 1, 0, n_bins - 1)

    n = probs.shape[0]
    counts = np.bincount(bins, minlength=n_bins)
    mean_conf = np.full(n_bins, np.nan)
    mean_acc = np.full(n_bins, np.nan)
    value = 0.0
    for k in np.flatnonzero(counts):
        in_bin = bins == k
        mean_conf[k] = conf[in_bin].mean()
        mean_acc[k] = correct[in_bin].mean()
        value += counts[k] / n * abs(mean_acc[k] - mean_conf[k])
    value = float(value)
    return CalibrationReport(n_bins, counts, mean_conf, mean_acc, value)


@dataclass(frozen=True)
class ClassTrajectories:
    epochs: np.ndarray  # (T,)
    acc: np.ndarray  # (M, T): acc[c] is class c's trajectory
    best: list[int]
    worst: list[int]


def class_accuracy_series(log, k: int = 2, epochs=None) -> ClassTrajectories:
    """Per-class trajectories from a ``T x M`` log, with best/worst ``k`` by final accuracy.

    Ties are broken by ascending class id in both rankings.
    """
    log = np.asarray(log, dtype=np.float64)
    if log.ndim != 2 or log.shape[0] == 0:
        raise ValueError("log must be a non-empty (epochs, classes) array")
    t, m = log.shape
    epochs = np.arange(1, t + 1) if epochs is None else np.asarray(epochs)
    final = log[-1]
    best = sorted(range(m), key=lambda c: (-final[c], c))[:k]
    worst = sorted(range(m), key=lambda c: (final[c], c))[:k]
    return ClassTrajectories(epochs, log.T.copy(), best, worst)
