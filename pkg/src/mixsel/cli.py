"""Command-line entry point: ``mixsel {train,gen-data,eval,inspect-log,export-plot-data}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from mixsel.config import MIX_MODES, ExperimentConfig
from mixsel.dataset import (BlobsSpec, LongTailSpec, generate_blobs, load_csv, make_long_tailed,
                            parse_kv, save_csv)
from mixsel.harness import TrainingAborted, export_plot_data, read_trace, run_training, summarize_trace
from mixsel.metrics import ece
from mixsel.model import evaluate, load_checkpoint

DEFAULT_SPREAD = 0.25


def blobs_from_tokens(tokens) -> BlobsSpec:
    kv = parse_kv(tokens)
    grid_keys = {"h", "w", "ch"} & kv.keys()
    grid = None
    if grid_keys:
        if grid_keys != {"h", "w", "ch"}:
            raise ValueError("grid blobs need all of h=, w=, ch=")
        grid = (int(kv.pop("h")), int(kv.pop("w")), int(kv.pop("ch")))
    spec = BlobsSpec(
        m=int(kv.pop("m")),
        d=int(kv.pop("d")) if "d" in kv else (grid[0] * grid[1] * grid[2] if grid else 0),
        per_class=int(kv.pop("per_class")),
        spread=float(kv.pop("spread", DEFAULT_SPREAD)),
        seed=int(kv.pop("seed", 0)),
        grid=grid,
    )
    if kv:
        raise ValueError(f"unknown blobs keys: {sorted(kv)}")
    return spec


def longtail_from_tokens(tokens) -> tuple[LongTailSpec, int | None]:
    kv = parse_kv(tokens)
    seed = int(kv.pop("seed")) if "seed" in kv else None
    spec = LongTailSpec(rho=float(kv.pop("rho")), n_max=int(kv.pop("n_max")))
    if kv:
        raise ValueError(f"unknown longtail keys: {sorted(kv)}")
    return spec, seed


def _bool_flag(p, name, help_text):
    p.add_argument(f"--{name}", dest=name.replace("-", "_"), action=argparse.BooleanOptionalAction,
                   default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixsel", description="Class-distance-aware mixup experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    g.add_argument("--blobs", nargs="+", required=True, metavar="KEY=VAL",
                   help="m= d= per-class= [spread=] [seed=] [h= w= ch=]")
    g.add_argument("--longtail", nargs="+", metavar="KEY=VAL", help="rho= n-max= [seed=]")
    g.add_argument("--sample-stream", type=int, default=0,
                   help="independent noise draw around the same centers (use 1 for a test split)")
    g.add_argument("--out", required=True, help="output CSV path")

    t = sub.add_parser("train", help="run a training experiment")
    t.add_argument("--config", help="JSON config (e.g. a previous config.echo.json)")
    src = t.add_mutually_exclusive_group()
    src.add_argument("--data", help="training CSV")
    src.add_argument("--blobs", nargs="+", metavar="KEY=VAL", help="generate blobs in memory")
    t.add_argument("--longtail", nargs="+", metavar="KEY=VAL", help="rho= n-max=")
    t.add_argument("--test-data", help="held-out CSV")
    t.add_argument("--test-per-class", type=int, help="held-out blobs per class (blobs source only)")
    t.add_argument("--hidden", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--lr", type=float, dest="learning_rate")
    t.add_argument("--alpha", type=float)
    t.add_argument("--n-min", type=int)
    t.add_argument("--delta", type=int)
    t.add_argument("--r-init", choices=["asc", "desc"])
    t.add_argument("--mix-mode", choices=MIX_MODES)
    _bool_flag(t, "selection", "restrict partners to the selected classes")
    _bool_flag(t, "balanced", "class-uniform partner sampling")
    t.add_argument("--seed", type=int)
    t.add_argument("--eval-cap", type=int, help="stratified cap on rows used for per-epoch statistics")
    t.add_argument("--out", help="run directory")
    t.add_argument("-v", "--verbose", action="store_true")

    e = sub.add_parser("eval", help="accuracy and ECE of a checkpoint on a CSV dataset")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--bins", type=int, default=15)
    e.add_argument("--out", help="also write the JSON report here")

    i = sub.add_parser("inspect-log", help="summarize a selection trace")
    i.add_argument("path", help="run directory or selection_trace.jsonl")

    x = sub.add_parser("export-plot-data", help="write class-accuracy / partner-count CSV series")
    x.add_argument("run_dir")
    x.add_argument("--k", type=int, default=2, help="number of best and worst classes to tag")
    x.add_argument("--out", help="output directory (defaults to the run directory)")
    return parser


def config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    base.setdefault("train", {})
    if args.data:
        base["data_csv"], base["blobs"] = args.data, None
    if args.blobs:
        spec = blobs_from_tokens(args.blobs)
        base["blobs"], base["data_csv"] = spec.__dict__, None
    if args.longtail:
        spec, _ = longtail_from_tokens(args.longtail)
        base["longtail"] = spec.__dict__
    for key, attr in [("test_csv", "test_data"), ("test_per_class", "test_per_class"),
                      ("hidden", "hidden"), ("eval_cap", "eval_cap"), ("out_dir", "out")]:
        if getattr(args, attr) is not None:
            base[key] = getattr(args, attr)
    overrides = {
        "epochs": args.epochs, "batch_size": args.batch_size, "learning_rate": args.learning_rate,
        "alpha": args.alpha, "n_min": args.n_min, "delta": args.delta, "r_init": args.r_init,
        "mix_mode": args.mix_mode, "selection_enabled": args.selection,
        "balanced_partners": args.balanced, "seed": args.seed,
    }
    base["train"].update({k: v for k, v in overrides.items() if v is not None})
    if args.verbose:
        base["verbosity"] = "debug"
    return ExperimentConfig.from_dict(base)


def cmd_gen_data(args) -> int:
    spec = blobs_from_tokens(args.blobs)
    ds = generate_blobs(spec.m, spec.d, spec.per_class, spec.spread, spec.seed, grid=spec.grid,
                        sample_stream=args.sample_stream)
    if args.longtail:
        lt, lt_seed = longtail_from_tokens(args.longtail)
        ds = make_long_tailed(ds, lt, spec.seed if lt_seed is None else lt_seed)
    save_csv(ds, args.out)
    print(json.dumps({"path": args.out, "n": len(ds), "class_counts": ds.class_counts.tolist()}))
    return 0


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    logging.basicConfig(level=logging.DEBUG if cfg.verbosity == "debug" else logging.INFO,
                        format="%(message)s", stream=sys.stderr)
    result = run_training(cfg)
    last = result.epochs[-1]
    print(json.dumps({"out_dir": str(result.out_dir), "epochs": last.epoch,
                      "train_acc": last.train_acc, "test_acc": last.test_acc, "test_ece": last.test_ece}))
    return 0


def cmd_eval(args) -> int:
    clf = load_checkpoint(args.ckpt)
    ds = load_csv(args.data)
    ev = evaluate(clf, ds)
    report = {
        "n": len(ds),
        "accuracy": ev.accuracy,
        "per_class_accuracy": ev.per_class_acc.tolist(),
        "calibration": ece(ev.probs, ds.labels, args.bins).to_dict(),
    }
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_inspect_log(args) -> int:
    print(json.dumps(summarize_trace(read_trace(args.path)), indent=2))
    return 0


def cmd_export(args) -> int:
    for p in export_plot_data(args.run_dir, k=args.k, out_dir=args.out):
        print(p)
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "inspect-log": cmd_inspect_log,
    "export-plot-data": cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, KeyError, OSError, TrainingAborted) as exc:
        print(f"mixsel {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
