"""Mixup and CutMix batch construction with pluggable partner choice.

Partners are drawn one of three ways: uniformly over all samples (plain
mixup), class-uniform then sample-uniform (balanced, for long-tailed data),
or from the current per-class partner sets of a :class:`SelectionState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from mixsel.dataset import LabeledDataset
from mixsel.rng import stream
from mixsel.selection import SelectionState


class UnsupportedShapeError(ValueError):
    pass


class MixRngs(NamedTuple):
    lam: np.random.Generator
    partner: np.random.Generator
    box: np.random.Generator

    @classmethod
    def for_epoch(cls, seed: int, epoch: int) -> "MixRngs":
        return cls(stream(seed, "lambda", epoch), stream(seed, "partner", epoch), stream(seed, "box", epoch))

    @classmethod
    def single(cls, rng: np.random.Generator) -> "MixRngs":
        return cls(rng, rng, rng)


@dataclass(frozen=True)
class MixedBatch:
    features: np.ndarray  # (B, D)
    soft_labels: np.ndarray  # (B, M)
    lambdas: np.ndarray  # (B,) weight on the anchor sample's label
    indices: np.ndarray  # (B,) anchor sample ids
    partner_ids: np.ndarray  # (B,)


def sample_lambda(alpha: float, rng: np.random.Generator) -> float:
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    return float(rng.beta(alpha, alpha))


def mix_linear(x_a, y_a, x_b, y_b, lam: float):
    x_a, x_b = np.asarray(x_a, dtype=np.float64), np.asarray(x_b, dtype=np.float64)
    y_a, y_b = np.asarray(y_a, dtype=np.float64), np.asarray(y_b, dtype=np.float64)
    if x_a.shape != x_b.shape or y_a.shape != y_b.shape:
        raise ValueError("shape mismatch between mixed samples")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return lam * x_a + (1 - lam) * x_b, lam * y_a + (1 - lam) * y_b


def cutmix_box(h: int, w: int, lam: float, rng: np.random.Generator,
               center: Optional[tuple[int, int]] = None):
    """Random box of side ``sqrt(1-lam)`` times the grid, clipped to the grid.

    Returns ``((x0, y0, x1, y1), lam_adj)`` with ``x`` along width, ``y``
    along height and half-open bounds. ``lam_adj`` is the retained-area
    fraction, i.e. the label weight of the sample that receives the paste.
    """
    if h < 1 or w < 1:
        raise UnsupportedShapeError(f"cutmix needs a grid with h, w >= 1 (got {h}x{w})")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    cut = math.sqrt(1.0 - lam)
    cut_w, cut_h = int(w * cut), int(h * cut)
    if center is None:
        cy, cx = int(rng.integers(h)), int(rng.integers(w))
    else:
        cy, cx = center
    x0 = min(max(cx - cut_w // 2, 0), w)
    y0 = min(max(cy - cut_h // 2, 0), h)
    x1 = min(max(cx - cut_w // 2 + cut_w, 0), w)
    y1 = min(max(cy - cut_h // 2 + cut_h, 0), h)
    area = (x1 - x0) * (y1 - y0)
    return (x0, y0, x1, y1), 1.0 - area / (h * w)


def paste_box(x_a: np.ndarray, x_b: np.ndarray, grid: tuple[int, int, int], box) -> np.ndarray:
    """Copy of flat sample ``x_a`` with ``box`` taken from ``x_b``."""
    x0, y0, x1, y1 = box
    out = np.array(x_a, dtype=np.float64).reshape(grid)
    out[y0:y1, x0:x1, :] = np.asarray(x_b).reshape(grid)[y0:y1, x0:x1, :]
    return out.ravel()


def choose_partner(i: int, ds: LabeledDataset, sel: Optional[SelectionState], balanced: bool,
                   rng: np.random.Generator) -> int:
    if sel is not None:
        classes = sel.selected[int(ds.labels[i])]
        if not classes:
            raise RuntimeError(f"selection invariant violated: class {int(ds.labels[i])} has no partners")
        c = classes[int(rng.integers(len(classes)))]
    elif balanced:
        c = int(rng.integers(ds.num_classes))
    else:
        return int(rng.integers(len(ds)))
    members = ds.class_indices[c]
    return int(members[int(rng.integers(members.size))])


def mix_pair(ds: LabeledDataset, i: int, j: int, lam: float, mode: str,
             box_rng: Optional[np.random.Generator] = None):
    """Mix anchor ``i`` with partner ``j``; returns ``(x, y, label_weight_of_i)``."""
    m = ds.num_classes
    a, b = int(ds.labels[i]), int(ds.labels[j])
    if mode == "mixup":
        x = lam * ds.features[i] + (1 - lam) * ds.features[j]
    elif mode == "cutmix":
        if ds.grid is None:
            raise UnsupportedShapeError("cutmix requires grid-shaped data")
        box, lam = cutmix_box(ds.grid[0], ds.grid[1], lam, box_rng)
        x = paste_box(ds.features[i], ds.features[j], ds.grid, box)
    else:
        raise ValueError(f"cannot mix in mode {mode!r}")
    y = np.zeros(m)
    if a == b:
        y[a] = 1.0
    else:
        y[a] = lam
        y[b] = 1.0 - lam
    return x, y, lam


def build_mixed_batch(indices: Sequence[int], ds: LabeledDataset, cfg, sel: Optional[SelectionState],
                      rng: Union[np.random.Generator, MixRngs],
                      lambdas: Optional[Sequence[float]] = None) -> MixedBatch:
    """Mix every sample of the batch with a freshly chosen partner.

    ``cfg`` needs ``mix_mode``, ``alpha`` and ``balanced_partners``. Pass
    ``sel=None`` for random partners. ``lambdas`` overrides the Beta draws.
    """
    if cfg.mix_mode not in ("mixup", "cutmix"):
        raise ValueError(f"build_mixed_batch called with mix_mode={cfg.mix_mode!r}")
    if cfg.mix_mode == "cutmix" and ds.grid is None:
        raise UnsupportedShapeError("cutmix requires grid-shaped data")
    rngs = rng if isinstance(rng, MixRngs) else MixRngs.single(rng)
    indices = np.asarray(indices, dtype=np.int64)
    b = indices.size
    xs = np.empty((b, ds.dim))
    ys = np.empty((b, ds.num_classes))
    lams = np.empty(b)
    partners = np.empty(b, dtype=np.int64)
    for k, i in enumerate(indices):
        lam = sample_lambda(cfg.alpha, rngs.lam) if lambdas is None else float(lambdas[k])
        j = choose_partner(int(i), ds, sel, cfg.balanced_partners, rngs.partner)
        xs[k], ys[k], lams[k] = mix_pair(ds, int(i), j, lam, cfg.mix_mode, rngs.box)
        partners[k] = j
    return MixedBatch(xs, ys, lams, indices, partners)


def plain_batch(indices: Sequence[int], ds: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    indices = np.asarray(indices, dtype=np.int64)
    y = np.zeros((indices.size, ds.num_classes))
    y[np.arange(indices.size), ds.labels[indices]] = 1.0
    return ds.features[indices], y
