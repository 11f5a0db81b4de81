"""Command line interface: ``groupsparse {train,eval,prune,sweep,featmap,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import data as data_mod
from .experiment import (PRESETS, SWEEP_LAMBDAS, ExperimentConfig, ExperimentError, feature_map_export,
                         lambda_sweep, render_report, run_experiment, run_once, sweep_summary,
                         write_sweep_csv)
from .network import accuracy
from .optimizer import TrainConfig
from .pruning import compact, prune_report, threshold_weights
from .serialize import deserialize_model, serialize_model

log = logging.getLogger("groupsparse")


def load_dataset(source, fmt, max_samples=None):
    """Load and min-max scale a dataset. ``idx`` sources are ``IMAGES,LABELS``."""
    if fmt == "digits":
        ds = data_mod.load_digits()
    elif fmt == "csv":
        ds = data_mod.load_csv(source)
    elif fmt == "idx":
        try:
            images, labels = source.split(",")
        except ValueError:
            raise SystemExit("--format idx expects --data IMAGES_FILE,LABELS_FILE") from None
        ds = data_mod.load_idx(images, labels)
    else:
        raise SystemExit(f"unknown format {fmt}")
    if max_samples is not None and max_samples < len(ds):
        ds = ds.subset(slice(0, max_samples))
    return data_mod.normalize_minmax(ds)


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _add_data_args(p):
    p.add_argument("--data", help="data file (csv) or IMAGES,LABELS (idx)")
    p.add_argument("--format", choices=["csv", "idx", "digits"], default=None,
                   help="input format; 'digits' uses the bundled 8x8 digits set")
    p.add_argument("--max-samples", type=int, default=None, help="keep only the first N samples")
    p.add_argument("--test-frac", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)


def _add_train_args(p):
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--arch", type=_ints, default=None, help='hidden sizes, e.g. "40,20"')
    p.add_argument("--penalty", choices=["l2", "l1", "gl", "sgl"], default="sgl")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--bias-groups", choices=["per-bias", "per-layer"], default="per-bias")
    p.add_argument("--repeats", type=int, default=25)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for repeats/sweeps")


def _dataset_from_args(args):
    fmt = args.format
    if fmt is None:
        fmt = "digits" if args.data is None else ("idx" if "," in args.data else "csv")
    if fmt != "digits" and not args.data:
        raise SystemExit("--data is required for csv/idx input")
    return load_dataset(args.data, fmt, args.max_samples)


def _experiment_config(args) -> ExperimentConfig:
    base = ExperimentConfig.from_preset(args.preset or "digits")
    t = base.train
    train_cfg = TrainConfig(
        penalty=args.penalty,
        lam=t.lam if args.lam is None else args.lam,
        epochs=t.epochs if args.epochs is None else args.epochs,
        batch_size=t.batch_size if args.batch is None else args.batch,
        seed=args.seed,
        bias_mode=args.bias_groups,
        threshold=args.threshold,
    )
    return ExperimentConfig(hidden=args.arch or base.hidden, train=train_cfg,
                            repeats=args.repeats, test_fraction=args.test_frac)


def cmd_train(args):
    ds = _dataset_from_args(args)
    cfg = _experiment_config(args)
    res = run_once(ds, cfg.hidden, cfg.train, cfg.test_fraction, keep_network=True)
    meta = {
        "penalty": cfg.train.penalty.value, "lambda": cfg.train.lam, "seed": cfg.train.seed,
        "threshold": cfg.train.threshold, "epochs": cfg.train.epochs, "batch_size": cfg.train.batch_size,
        "test_fraction": cfg.test_fraction, "dataset": ds.name,
    }
    if ds.image_shape:
        meta["image_shape"] = list(ds.image_shape)
    out = Path(args.out or "model.json")
    serialize_model(res.network, out, meta)
    summary = {"model": str(out), "train_accuracy": res.train_accuracy,
               "test_accuracy": res.test_accuracy, "seconds": res.seconds, **res.report.to_dict()}
    summary.pop("feature_mask")
    print(json.dumps(summary, indent=2))


def cmd_eval(args):
    net, meta = deserialize_model(args.model)
    ds = _dataset_from_args(args)
    frac = meta.get("test_fraction", args.test_frac)
    seed = meta.get("seed", args.seed)
    train_set, test_set = data_mod.split(ds, frac, seed)
    print(json.dumps({
        "train_accuracy": accuracy(net, train_set.features, train_set.labels),
        "test_accuracy": accuracy(net, test_set.features, test_set.labels),
        "all_accuracy": accuracy(net, ds.features, ds.labels),
    }, indent=2))


def cmd_prune(args):
    net, meta = deserialize_model(args.model)
    pruned = threshold_weights(net, args.threshold)
    report = prune_report(net, pruned, args.threshold)
    small, keep = compact(pruned)
    if args.out:
        meta = {**meta, "threshold": args.threshold, "kept_inputs": keep[0].tolist()}
        serialize_model(small, args.out, meta)
    print(json.dumps(report.to_dict(), indent=2))


def cmd_featmap(args):
    net, meta = deserialize_model(args.model)
    shape = _ints(args.shape.replace("x", ",")) if args.shape else tuple(meta.get("image_shape", ()))
    if len(shape) != 2:
        raise SystemExit("image shape unknown; pass --shape ROWSxCOLS")
    pgm, table = feature_map_export(net, shape, args.out or "featmap")
    print(f"wrote {pgm} and {table}")


def cmd_sweep(args):
    ds = _dataset_from_args(args)
    cfg = _experiment_config(args)
    penalties = args.penalties.split(",")
    records = lambda_sweep(ds, cfg, args.lambdas, penalties, n_jobs=args.jobs)
    out = Path(args.out or "sweep")
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(records, out / "sweep.csv")
    (out / "sweep_summary.json").write_text(json.dumps(sweep_summary(records), indent=2) + "\n")
    print(f"wrote {len(records)} rows to {out / 'sweep.csv'}")


def cmd_report(args):
    ds = _dataset_from_args(args)
    cfg = _experiment_config(args)
    results = {}
    for pen in args.penalties.split(","):
        run_cfg = replace(cfg, train=replace(cfg.train, penalty=pen))
        results[pen] = run_experiment(ds, run_cfg, n_jobs=args.jobs, include_timing=not args.no_timing)
    json_path, txt_path = render_report(results, args.out or "report")
    print(txt_path.read_text(), end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupsparse", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one network and save it")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--out", help="model file (default model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy of a saved model")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("prune", help="threshold and compact a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--out", help="write the compacted model here")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("featmap", help="export input-weight strength as PGM and CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--shape", help="ROWSxCOLS, defaults to the model metadata")
    p.add_argument("--out", help="output prefix (default featmap)")
    p.set_defaults(func=cmd_featmap)

    p = sub.add_parser("sweep", help="lambda x penalty x repeat sweep to CSV")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--lambdas", type=_floats, default=list(SWEEP_LAMBDAS))
    p.add_argument("--penalties", default="l2,l1,gl,sgl")
    p.add_argument("--out", help="output directory (default sweep)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="repeated runs per penalty, JSON + text table")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--penalties", default="l2,l1,sgl")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock times")
    p.add_argument("--out", help="report path prefix (default report)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (ValueError, OSError, ExperimentError) as exc:
        print(f"groupsparse: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
