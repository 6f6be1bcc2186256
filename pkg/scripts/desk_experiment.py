"""Desk-scale comparison of plain training, mixup, CutMix and selection-driven partners.

Two sweeps over synthetic Gaussian blobs with a held-out split:

* balanced: 10 classes on a 4x4x1 grid so CutMix applies;
* long-tailed: the same blobs subsampled at several imbalance ratios, with
  class-balanced partners as the baseline.

Prints one table per sweep (final test accuracy and ECE, mean over seeds).
Run directories land under ``--out``.

    python3 scripts/desk_experiment.py --epochs 30 --seeds 0 1 2
"""

from __future__ import annotations

import argparse
import statistics
from pathlib import Path

from mixsel.config import ExperimentConfig, TrainConfig
from mixsel.dataset import BlobsSpec, LongTailSpec
from mixsel.harness import run_training

BALANCED_ARMS = {
    "no-aug": dict(mix_mode="none", selection_enabled=False),
    "mixup": dict(mix_mode="mixup", selection_enabled=False),
    "mixup+sel": dict(mix_mode="mixup", selection_enabled=True),
    "cutmix": dict(mix_mode="cutmix", selection_enabled=False),
    "cutmix+sel": dict(mix_mode="cutmix", selection_enabled=True),
}

LONGTAIL_ARMS = {
    "no-aug": dict(mix_mode="none", selection_enabled=False),
    "mixup": dict(mix_mode="mixup", selection_enabled=False),
    "mixup+sel": dict(mix_mode="mixup", selection_enabled=True),
    "balanced": dict(mix_mode="mixup", selection_enabled=False, balanced_partners=True),
}


def run_arm(out: Path, blobs: BlobsSpec, arm: dict, seed: int, args, longtail=None):
    train = TrainConfig(epochs=args.epochs, batch_size=64, learning_rate=args.lr, seed=seed, **arm)
    cfg = ExperimentConfig(train=train, blobs=blobs, longtail=longtail, hidden=args.hidden,
                           test_per_class=args.test_per_class, out_dir=str(out), verbosity="warning")
    last = run_training(cfg).epochs[-1]
    return last.test_acc, last.test_ece


def table(title: str, rows: dict[str, list[tuple[float, float]]]) -> str:
    lines = [title, f"{'arm':<12} {'test acc':>9} {'ECE':>8}"]
    for name, vals in rows.items():
        acc = statistics.fmean(a for a, _ in vals)
        ece = statistics.fmean(e for _, e in vals)
        lines.append(f"{name:<12} {100 * acc:>8.2f}% {100 * ece:>7.2f}%")
    return "\n".join(lines)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--hidden", type=int, default=32)
    ap.add_argument("--lr", type=float, default=0.1)
    ap.add_argument("--spread", type=float, default=0.35)
    ap.add_argument("--test-per-class", type=int, default=100)
    ap.add_argument("--rhos", type=float, nargs="+", default=[10.0, 50.0, 100.0])
    ap.add_argument("--out", type=Path, default=Path("runs/desk"))
    args = ap.parse_args(argv)

    blobs = BlobsSpec(m=10, d=16, per_class=200, spread=args.spread, seed=1, grid=(4, 4, 1))
    results = {name: [] for name in BALANCED_ARMS}
    for seed in args.seeds:
        for name, arm in BALANCED_ARMS.items():
            results[name].append(run_arm(args.out / "balanced" / name / f"s{seed}", blobs, arm, seed, args))
    print(table("balanced, 10 classes", results))

    lt_blobs = BlobsSpec(m=10, d=16, per_class=500, spread=args.spread, seed=1)
    for rho in args.rhos:
        lt = LongTailSpec(rho=rho, n_max=500)
        results = {name: [] for name in LONGTAIL_ARMS}
        for seed in args.seeds:
            for name, arm in LONGTAIL_ARMS.items():
                out = args.out / f"longtail-{rho:g}" / name / f"s{seed}"
                results[name].append(run_arm(out, lt_blobs, arm, seed, args, longtail=lt))
        print()
        print(table(f"long-tailed, rho={rho:g}", results))


if __name__ == "__main__":
    main()
