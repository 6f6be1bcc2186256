"""Training and experiment configuration, JSON round-trippable."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from mixsel.dataset import BlobsSpec, LongTailSpec

MIX_MODES = ("none", "mixup", "cutmix")


@dataclass(frozen=True)
class TrainConfig:
    # defaults mirror the usual CIFAR mixup setup; learning_rate is a free choice
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 0.1
    alpha: float = 1.0
    n_min: int = 5
    delta: int = 5
    r_init: str = "desc"
    mix_mode: str = "mixup"
    selection_enabled: bool = True
    balanced_partners: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.n_min < 1 or self.delta < 1:
            raise ValueError("n_min and delta must be >= 1")
        if self.r_init not in ("asc", "desc"):
            raise ValueError(f"r_init must be 'asc' or 'desc', got {self.r_init!r}")
        if self.mix_mode not in MIX_MODES:
            raise ValueError(f"mix_mode must be one of {MIX_MODES}, got {self.mix_mode!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run.

    Exactly one of ``data_csv`` / ``blobs`` must be set. ``longtail`` applies
    to the training split only; the held-out split (``test_csv`` or
    ``test_per_class`` fresh blob draws) stays balanced.
    """

    train: TrainConfig = field(default_factory=TrainConfig)
    data_csv: Optional[str] = None
    blobs: Optional[BlobsSpec] = None
    longtail: Optional[LongTailSpec] = None
    test_csv: Optional[str] = None
    test_per_class: int = 0
    hidden: int = 32
    eval_cap: Optional[int] = None
    ece_bins: int = 15
    out_dir: str = "runs/default"
    verbosity: str = "info"

    def __post_init__(self):
        if (self.data_csv is None) == (self.blobs is None):
            raise ValueError("set exactly one of data_csv or blobs")
        if self.hidden < 0:
            raise ValueError("hidden must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d["train"] = TrainConfig(**d.get("train", {}))
        if d.get("blobs") is not None:
            b = dict(d["blobs"])
            if b.get("grid") is not None:
                b["grid"] = tuple(b["grid"])
            d["blobs"] = BlobsSpec(**b)
        if d.get("longtail") is not None:
            d["longtail"] = LongTailSpec(**d["longtail"])
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))
