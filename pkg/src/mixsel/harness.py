"""Training loop with per-epoch partner selection, logging and plot-data export.

Epoch 1 trains on plain batches. At the end of every epoch the whole
training set (or a stratified cap of it) is evaluated once; the resulting
probabilities give both the class accuracies and the class-distance table,
which update the selection state used for the next epoch's mixing.

Run directory layout::

    config.echo.json      resolved config; feeding it back to `train` reproduces the run
    epochs.csv            one row per epoch (deterministic)
    selection_trace.jsonl one record per (epoch, class)
    timing.csv            wall-clock seconds per epoch (not deterministic)
    model.ckpt            final (or last good) parameters
    plot_*.csv            class-accuracy and partner-count series
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from mixsel.augment import MixRngs, build_mixed_batch, plain_batch
from mixsel.config import ExperimentConfig
from mixsel.dataset import (LabeledDataset, generate_blobs, iter_batches, load_csv,
                            make_long_tailed, stratified_cap)
from mixsel.metrics import class_accuracy_series, ece
from mixsel.model import (Classifier, NonFiniteError, evaluate, init_classifier,
                          save_checkpoint, sgd_step)
from mixsel.probstats import distances_from_probs
from mixsel.selection import SelectionState, epoch_update, init_state, trace_records

log = logging.getLogger("mixsel")


class TrainingAborted(RuntimeError):
    pass


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    train_acc: float
    per_class_acc: list[float]
    order: list[str]
    size: list[int]
    selected: list[list[int]]
    mixed_batches: int
    test_acc: Optional[float] = None
    test_ece: Optional[float] = None
    seconds: float = 0.0


@dataclass
class RunResult:
    classifier: Classifier
    epochs: list[EpochLog]
    state: SelectionState
    out_dir: Path
    train_set: LabeledDataset = field(repr=False)
    test_set: Optional[LabeledDataset] = field(default=None, repr=False)


def build_datasets(cfg: ExperimentConfig) -> tuple[LabeledDataset, Optional[LabeledDataset]]:
    seed = cfg.train.seed
    if cfg.data_csv is not None:
        train = load_csv(cfg.data_csv)
    else:
        b = cfg.blobs
        train = generate_blobs(b.m, b.d, b.per_class, b.spread, b.seed, grid=b.grid)
    if cfg.longtail is not None:
        train = make_long_tailed(train, cfg.longtail, seed)

    test = None
    if cfg.test_csv is not None:
        test = load_csv(cfg.test_csv)
    elif cfg.test_per_class > 0:
        if cfg.blobs is None:
            raise ValueError("test_per_class needs a blobs data source")
        b = cfg.blobs
        test = generate_blobs(b.m, b.d, cfg.test_per_class, b.spread, b.seed, grid=b.grid,
                              sample_stream=1)
    if test is not None and (test.num_classes != train.num_classes or test.dim != train.dim):
        raise ValueError("test set shape does not match training set")
    return train, test


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def epochs_header(m: int, with_test: bool) -> list[str]:
    cols = ["epoch", "train_loss", "train_acc", "mixed_batches"]
    if with_test:
        cols += ["test_acc", "test_ece"]
    cols += [f"acc_{c}" for c in range(m)]
    cols += [f"n_{c}" for c in range(m)]
    cols += [f"r_{c}" for c in range(m)]
    return cols


def epochs_row(e: EpochLog, with_test: bool) -> list[str]:
    row = [e.epoch, e.train_loss, e.train_acc, e.mixed_batches]
    if with_test:
        row += [e.test_acc, e.test_ece]
    row += e.per_class_acc + e.size + e.order
    return [_fmt(v) for v in row]


def run_training(cfg: ExperimentConfig) -> RunResult:
    tc = cfg.train
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo.json").write_text(cfg.dumps())

    train, test = build_datasets(cfg)
    m = train.num_classes
    eval_set = train if cfg.eval_cap is None else train.subset(stratified_cap(train, cfg.eval_cap, tc.seed))
    clf = init_classifier(train.dim, cfg.hidden, m, tc.seed)
    state = init_state(m, tc.n_min, tc.r_init)
    with_test = test is not None
    history: list[EpochLog] = []

    with open(out / "epochs.csv", "w", newline="") as f_ep, \
            open(out / "selection_trace.jsonl", "w") as f_tr, \
            open(out / "timing.csv", "w", newline="") as f_tm:
        ep_writer = csv.writer(f_ep, lineterminator="\n")
        ep_writer.writerow(epochs_header(m, with_test))
        tm_writer = csv.writer(f_tm, lineterminator="\n")
        tm_writer.writerow(["epoch", "seconds"])

        for epoch in range(1, tc.epochs + 1):
            t0 = time.perf_counter()
            mixing = epoch >= 2 and tc.mix_mode != "none"
            rngs = MixRngs.for_epoch(tc.seed, epoch)
            sel = state if tc.selection_enabled else None
            loss_sum, n_seen, mixed = 0.0, 0, 0
            for batch in iter_batches(train, tc.batch_size, tc.seed, epoch):
                if mixing:
                    mb = build_mixed_batch(batch, train, tc, sel, rngs)
                    x, y = mb.features, mb.soft_labels
                    mixed += 1
                else:
                    x, y = plain_batch(batch, train)
                try:
                    clf_next, loss = sgd_step(clf, x, y, tc.learning_rate)
                except NonFiniteError as exc:
                    save_checkpoint(clf, out / "model.ckpt")
                    raise TrainingAborted(
                        f"epoch {epoch}: {exc}; last good parameters saved to {out / 'model.ckpt'}"
                    ) from exc
                clf = clf_next
                loss_sum += loss * len(batch)
                n_seen += len(batch)

            ev = evaluate(clf, eval_set)
            dist = distances_from_probs(ev.probs, eval_set.class_indices)
            state = epoch_update(state, ev.per_class_acc, dist, tc.delta)

            entry = EpochLog(
                epoch=epoch,
                train_loss=loss_sum / n_seen,
                train_acc=ev.accuracy,
                per_class_acc=[float(a) for a in ev.per_class_acc],
                order=list(state.order),
                size=list(state.size),
                selected=[list(s) for s in state.selected],
                mixed_batches=mixed,
            )
            if with_test:
                tev = evaluate(clf, test)
                entry.test_acc = tev.accuracy
                entry.test_ece = ece(tev.probs, test.labels, cfg.ece_bins).ece
            entry.seconds = time.perf_counter() - t0
            history.append(entry)

            ep_writer.writerow(epochs_row(entry, with_test))
            for rec in trace_records(state, epoch):
                f_tr.write(json.dumps(rec) + "\n")
            tm_writer.writerow([epoch, f"{entry.seconds:.4f}"])
            log.info("epoch %d loss %.4f train_acc %.4f%s", epoch, entry.train_loss, entry.train_acc,
                     f" test_acc {entry.test_acc:.4f}" if with_test else "")

    save_checkpoint(clf, out / "model.ckpt")
    export_plot_data(out)
    return RunResult(clf, history, state, out, train, test)


# ---------------------------------------------------------------- reading runs


def read_epochs(run_dir) -> tuple[np.ndarray, np.ndarray, list[dict]]:
    """``(epochs, acc[T, M], rows)`` from a run's ``epochs.csv``."""
    with open(Path(run_dir) / "epochs.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{run_dir}: epochs.csv has no rows")
    m = sum(1 for k in rows[0] if k.startswith("acc_"))
    epochs = np.array([int(r["epoch"]) for r in rows])
    acc = np.array([[float(r[f"acc_{c}"]) for c in range(m)] for r in rows])
    return epochs, acc, rows


def read_trace(path) -> list[dict]:
    path = Path(path)
    if path.is_dir():
        path = path / "selection_trace.jsonl"
    with path.open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def export_plot_data(run_dir, k: int = 2, out_dir=None) -> list[Path]:
    """Write class-accuracy and partner-count series for the best/worst ``k`` classes.

    Both files hold every class; ``group`` marks ranks such as ``best-1`` or
    ``worst-2`` (by final training accuracy) so that plots can filter on it.
    """
    run_dir = Path(run_dir)
    out_dir = run_dir if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    epochs, acc, _ = read_epochs(run_dir)
    traj = class_accuracy_series(acc, k=k, epochs=epochs)
    groups: dict[int, list[str]] = {}
    for rank, c in enumerate(traj.best, 1):
        groups.setdefault(c, []).append(f"best-{rank}")
    for rank, c in enumerate(traj.worst, 1):
        groups.setdefault(c, []).append(f"worst-{rank}")

    acc_path = out_dir / "plot_class_accuracy.csv"
    with acc_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "class", "accuracy", "group"])
        for c in range(traj.acc.shape[0]):
            for e, a in zip(traj.epochs, traj.acc[c]):
                w.writerow([int(e), c, repr(float(a)), ";".join(groups.get(c, []))])

    sel_path = out_dir / "plot_selected_classes.csv"
    with sel_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "class", "n", "r", "group"])
        for rec in sorted(read_trace(run_dir), key=lambda r: (r["class"], r["epoch"])):
            w.writerow([rec["epoch"], rec["class"], rec["n"], rec["r"],
                        ";".join(groups.get(rec["class"], []))])
    return [acc_path, sel_path]


def summarize_trace(records: list[dict]) -> dict:
    """Per-class n range, flip count and final state from a selection trace."""
    by_class: dict[int, list[dict]] = {}
    for rec in records:
        by_class.setdefault(rec["class"], []).append(rec)
    classes = {}
    for c, recs in sorted(by_class.items()):
        recs.sort(key=lambda r: r["epoch"])
        ns = [r["n"] for r in recs]
        flips = sum(a["r"] != b["r"] for a, b in zip(recs, recs[1:]))
        classes[c] = {"n_min": min(ns), "n_max": max(ns), "flips": flips,
                      "final_r": recs[-1]["r"], "final_n": recs[-1]["n"],
                      "final_selected": recs[-1]["selected"], "final_acc": recs[-1]["acc"]}
    epochs = sorted({r["epoch"] for r in records})
    return {"epochs": len(epochs), "records": len(records), "classes": classes,
            "total_flips": sum(v["flips"] for v in classes.values())}
