"""Per-class mixing-partner selection driven by accuracy trends and class distances.

Each class ``c`` carries a sort order (``"asc"`` = nearest classes first,
``"desc"`` = farthest first) and a partner-set size ``n``. After every epoch
the fresh class accuracy is compared with the previous one: a non-decrease
grows ``n`` by ``delta``; a strict decrease shrinks ``n`` by ``delta`` and
flips the order. ``n`` is clamped to ``[min(n_min, M-1), M-1]``. The partner
set is then the first ``n`` other classes by directed distance in that order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

ASC = "asc"
DESC = "desc"
ORDERS = (ASC, DESC)


def flip(order: str) -> str:
    return ASC if order == DESC else DESC


@dataclass(frozen=True)
class SelectionState:
    num_classes: int
    n_min_eff: int
    order: tuple[str, ...]
    size: tuple[int, ...]
    prev_acc: tuple[Optional[float], ...]
    selected: tuple[tuple[int, ...], ...]

    def partners(self, c: int) -> tuple[int, ...]:
        return self.selected[c]


def init_state(m: int, n_min: int, r_init: str) -> SelectionState:
    if m < 2:
        raise ValueError(f"selection needs at least 2 classes, got {m}")
    if n_min < 1:
        raise ValueError("n_min must be >= 1")
    if r_init not in ORDERS:
        raise ValueError(f"r_init must be one of {ORDERS}, got {r_init!r}")
    n0 = min(n_min, m - 1)
    return SelectionState(
        num_classes=m,
        n_min_eff=n0,
        order=(r_init,) * m,
        size=(n0,) * m,
        prev_acc=(None,) * m,
        selected=((),) * m,
    )


def update_class(order: str, n: int, acc_now: float, acc_prev: float, delta: int,
                 n_min_eff: int, m: int) -> tuple[str, int]:
    if acc_now >= acc_prev:
        return order, min(n + delta, m - 1)
    return flip(order), max(n - delta, n_min_eff)


def _rankings(dist: np.ndarray) -> dict[str, list[list[int]]]:
    # stable sort keeps equal distances in ascending class-id order for both directions
    return {
        ASC: np.argsort(dist, axis=1, kind="stable").tolist(),
        DESC: np.argsort(-dist, axis=1, kind="stable").tolist(),
    }


def _take(c: int, ranked: list[int], n: int) -> list[int]:
    return [k for k in ranked if k != c][:n]


def select_classes(c: int, dist_row: Sequence[float], order: str, n: int) -> list[int]:
    """The ``n`` classes other than ``c`` ranked by ``dist_row`` in ``order``; ties by class id."""
    if order not in ORDERS:
        raise ValueError(f"unknown order {order!r}")
    row = np.asarray(dist_row, dtype=np.float64)[None, :]
    return _take(c, _rankings(row)[order][0], n)


def epoch_update(state: SelectionState, per_class_acc: Sequence[float], dist: np.ndarray,
                 delta: int) -> SelectionState:
    """Fold one epoch's class accuracies and distances into a new state.

    On the first call (no previous accuracy) the sizes and orders are kept and
    only the partner sets are resolved.
    """
    m = state.num_classes
    acc = [float(a) for a in per_class_acc]
    dist = np.asarray(dist, dtype=np.float64)
    if len(acc) != m or dist.shape != (m, m):
        raise ValueError(f"expected {m} accuracies and an {m}x{m} distance matrix")
    if delta < 1:
        raise ValueError("delta must be >= 1")

    order, size, selected = list(state.order), list(state.size), []
    ranks = _rankings(dist)
    for c in range(m):
        if state.prev_acc[c] is not None:
            order[c], size[c] = update_class(order[c], size[c], acc[c], state.prev_acc[c],
                                             delta, state.n_min_eff, m)
        selected.append(tuple(_take(c, ranks[order[c]][c], size[c])))
    return replace(state, order=tuple(order), size=tuple(size), prev_acc=tuple(acc),
                   selected=tuple(selected))


def trace_records(state: SelectionState, epoch: int) -> list[dict]:
    """One JSON-ready record per class describing the state resolved after ``epoch``."""
    return [
        {"epoch": epoch, "class": c, "acc": state.prev_acc[c], "r": state.order[c],
         "n": state.size[c], "selected": list(state.selected[c])}
        for c in range(state.num_classes)
    ]
