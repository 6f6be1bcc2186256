"""Labeled datasets: CSV I/O, synthetic blobs, long-tailed subsampling, batching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from mixsel.rng import stream


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows with integer labels in ``[0, num_classes)``.

    Features are always stored flat as an ``N x D`` float array. ``grid`` is
    ``(H, W, Ch)`` for image-like data (``D == H*W*Ch``), otherwise ``None``.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    grid: Optional[tuple[int, int, int]] = None
    class_indices: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DatasetError("labels must have one entry per feature row")
        if self.num_classes < 1:
            raise DatasetError("num_classes must be >= 1")
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise DatasetError(f"labels must lie in [0, {self.num_classes})")
        if self.grid is not None:
            h, w, ch = self.grid
            if h * w * ch != x.shape[1]:
                raise DatasetError(f"grid {self.grid} does not match D={x.shape[1]}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        idx = tuple(np.flatnonzero(y == c) for c in range(self.num_classes))
        empty = [c for c, ix in enumerate(idx) if ix.size == 0]
        if empty:
            raise DatasetError(f"classes with no samples: {empty}")
        object.__setattr__(self, "class_indices", idx)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def class_counts(self) -> np.ndarray:
        return np.array([ix.size for ix in self.class_indices])

    def subset(self, rows: np.ndarray) -> "LabeledDataset":
        rows = np.asarray(rows)
        return LabeledDataset(self.features[rows], self.labels[rows], self.num_classes, self.grid)


@dataclass(frozen=True)
class LongTailSpec:
    rho: float
    n_max: int

    def __post_init__(self):
        if self.rho < 1:
            raise DatasetError(f"rho must be >= 1, got {self.rho}")
        if self.n_max < 1:
            raise DatasetError(f"n_max must be >= 1, got {self.n_max}")


@dataclass(frozen=True)
class BlobsSpec:
    m: int
    d: int
    per_class: int
    spread: float
    seed: int
    grid: Optional[tuple[int, int, int]] = None


# ---------------------------------------------------------------- CSV I/O


def _parse_header(line: str) -> dict[str, int]:
    if not line.startswith("#"):
        raise DatasetError("line 1: expected header '# D=<d> M=<m> [H=<h> W=<w> CH=<ch>]'")
    out = {}
    for tok in line[1:].split():
        key, sep, val = tok.partition("=")
        if not sep:
            raise DatasetError(f"line 1: malformed header token {tok!r}")
        try:
            out[key.upper()] = int(val)
        except ValueError:
            raise DatasetError(f"line 1: header value {tok!r} is not an integer") from None
    if "D" not in out or "M" not in out:
        raise DatasetError("line 1: header must declare D and M")
    grid_keys = {"H", "W", "CH"} & out.keys()
    if grid_keys and grid_keys != {"H", "W", "CH"}:
        raise DatasetError("line 1: grid header needs all of H, W, CH")
    return out


def load_csv(path) -> LabeledDataset:
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty file")
    head = _parse_header(lines[0])
    d, m = head["D"], head["M"]
    grid = (head["H"], head["W"], head["CH"]) if "H" in head else None
    if grid is not None and grid[0] * grid[1] * grid[2] != d:
        raise DatasetError(f"line 1: H*W*CH={grid[0] * grid[1] * grid[2]} but D={d}")

    feats, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != d + 1:
            raise DatasetError(f"malformed row at line {lineno}: expected {d + 1} fields, got {len(parts)}")
        try:
            row = [float(v) for v in parts[:d]]
            lab = int(parts[d])
        except ValueError:
            raise DatasetError(f"malformed row at line {lineno}: non-numeric field") from None
        if not 0 <= lab < m:
            raise DatasetError(f"label out of range at line {lineno}: {lab} not in [0, {m})")
        feats.append(row)
        labels.append(lab)

    y = np.array(labels, dtype=np.int64)
    missing = sorted(set(range(m)) - set(labels))
    if missing:
        raise DatasetError(f"{path}: empty class(es) {missing}")
    x = np.array(feats, dtype=np.float64).reshape(len(feats), d)
    return LabeledDataset(x, y, m, grid)


def save_csv(ds: LabeledDataset, path) -> None:
    """Write ``ds`` with ``repr`` floats so that ``load_csv`` reads it back exactly."""
    head = f"# D={ds.dim} M={ds.num_classes}"
    if ds.grid is not None:
        head += " H={} W={} CH={}".format(*ds.grid)
    rows = [head]
    for x, y in zip(ds.features, ds.labels):
        rows.append(",".join(repr(float(v)) for v in x) + f",{int(y)}")
    Path(path).write_text("\n".join(rows) + "\n")


# ---------------------------------------------------------------- generators


def blob_means(m: int, d: int, seed: int) -> np.ndarray:
    """Unit-norm class centers, pairwise distance sqrt(2) when m <= d."""
    rng = stream(seed, "data", 0)
    if m <= d:
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        q = q * np.sign(np.diag(r))
        return q[:, :m].T.copy()
    # more classes than dimensions: spread on the sphere
    v = rng.standard_normal((m, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def generate_blobs(m: int, d: int, per_class: int, spread: float, seed: int, *,
                   grid: Optional[tuple[int, int, int]] = None,
                   sample_stream: int = 0) -> LabeledDataset:
    """Isotropic Gaussian clusters around ``blob_means(m, d, seed)``.

    ``sample_stream`` selects an independent noise draw around the same
    centers, which is how held-out splits are produced.
    """
    if m < 2 or d < 2 or per_class < 1:
        raise DatasetError(f"need m >= 2, d >= 2, per_class >= 1 (got {m}, {d}, {per_class})")
    if spread < 0:
        raise DatasetError("spread must be non-negative")
    means = blob_means(m, d, seed)
    rng = stream(seed, "data", 1 + sample_stream)
    y = np.repeat(np.arange(m), per_class)
    x = means[y] + spread * rng.standard_normal((m * per_class, d))
    return LabeledDataset(x, y, m, grid)


def long_tail_counts(m: int, spec: LongTailSpec) -> list[int]:
    """Exponential profile ``round(n_max * rho**(-i/(m-1)))``, halves rounded up."""
    if m == 1:
        return [spec.n_max]
    return [int(math.floor(spec.n_max * spec.rho ** (-i / (m - 1)) + 0.5)) for i in range(m)]


def make_long_tailed(ds: LabeledDataset, spec: LongTailSpec, seed: int) -> LabeledDataset:
    counts = long_tail_counts(ds.num_classes, spec)
    short = [(c, k - ix.size) for c, (ix, k) in enumerate(zip(ds.class_indices, counts)) if ix.size < k]
    if short:
        detail = ", ".join(f"class {c} short by {gap}" for c, gap in short)
        raise DatasetError(f"insufficient samples for long-tail profile: {detail}")
    rng = stream(seed, "subsample")
    keep = [np.sort(rng.choice(ix, size=k, replace=False)) for ix, k in zip(ds.class_indices, counts)]
    return ds.subset(np.sort(np.concatenate(keep)))


def stratified_cap(ds: LabeledDataset, cap: int, seed: int) -> np.ndarray:
    """Row indices of a class-proportional subsample of at most ``cap`` rows (at least one per class)."""
    if cap >= len(ds):
        return np.arange(len(ds))
    rng = stream(seed, "subsample", 1)
    frac = cap / len(ds)
    rows = []
    for ix in ds.class_indices:
        k = max(1, int(round(ix.size * frac)))
        rows.append(rng.choice(ix, size=k, replace=False))
    return np.sort(np.concatenate(rows))


def iter_batches(ds_or_n, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    n = ds_or_n if isinstance(ds_or_n, (int, np.integer)) else len(ds_or_n)
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    perm = stream(seed, "shuffle", epoch).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def check_partition(ds: LabeledDataset) -> bool:
    allix = np.concatenate(ds.class_indices)
    return allix.size == len(ds) and np.array_equal(np.sort(allix), np.arange(len(ds)))


def parse_kv(tokens: Sequence[str]) -> dict[str, str]:
    """``["m=10", "per-class=200"]`` -> ``{"m": "10", "per_class": "200"}``."""
    out = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or not key:
            raise ValueError(f"expected key=value, got {tok!r}")
        out[key.replace("-", "_")] = val
    return out

