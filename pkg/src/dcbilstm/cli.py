"""Command-line front end.

Subcommands: train, eval, count-params, gradcheck, prepare-data, sweep.

Exit codes: 0 on success, 1 when a verification step fails (a gradient
check reports FAIL, an accuracy floor is missed, training diverges), 2 for
usage and configuration problems (argparse errors share this code).

Run settings come from an optional flat config file of `key = value` lines
(# starts a comment, unknown keys are rejected) overridden by command-line
flags; the effective configuration is echoed into the run log.
"""

import argparse
import dataclasses
import sys

import numpy as np

from . import data as D
from .errors import CheckpointError, ConfigError, ParseError, TrainingDiverged
from .gradcheck import check_model
from .model import count_params, format_param_count, load_checkpoint
from .train import TrainConfig, evaluate, train

# rows are (dl, dh, th); all tables assume 300-dim pretrained vectors
SWEEP_TABLES = {
    "t3": [(0, 10, 300), (5, 40, 100), (10, 20, 100), (15, 13, 100), (20, 10, 100)],
    "t4": [(0, 10, 100), (5, 10, 100), (10, 10, 100), (15, 10, 100), (20, 10, 100)],
    "t5": [(10, 0, 100), (10, 5, 100), (10, 10, 100), (10, 15, 100), (10, 20, 100)],
}

_BOOL_FIELDS = {"binary", "phrases", "train_embeddings"}
_INT_FIELDS = {"dl", "dh", "th", "num_classes", "batch_size", "epochs", "patience",
               "cv_folds", "embedding_dim", "seed"}
_FLOAT_FIELDS = {"dropout_embed", "dropout_pool", "forget_bias", "lr", "beta1",
                 "beta2", "eps", "dev_fraction", "softmax_l2"}
_OPT_FLOAT_FIELDS = {"max_norm_s", "stop_at_train_acc"}
_OPT_STR_FIELDS = {"dev_path", "test_path", "embeddings_path"}
_STR_FIELDS = {"arch", "data_format", "train_path", "out_dir"}
_ALL_FIELDS = (_BOOL_FIELDS | _INT_FIELDS | _FLOAT_FIELDS | _OPT_FLOAT_FIELDS
               | _OPT_STR_FIELDS | _STR_FIELDS)


def _coerce(key, value, line_no=None):
    try:
        if key in _BOOL_FIELDS:
            low = value.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if key in _INT_FIELDS:
            return int(value)
        if key in _FLOAT_FIELDS:
            return float(value)
        if key in _OPT_FLOAT_FIELDS:
            return None if value.lower() == "none" else float(value)
        if key in _OPT_STR_FIELDS:
            return None if value.lower() == "none" else value
        return value
    except ValueError as exc:
        raise ParseError(f"bad value for {key}: {exc}", line_no)


def parse_config_file(path):
    """Flat `key = value` file -> dict of typed TrainConfig overrides."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ParseError("expected 'key = value'", line_no)
            key, value = key.strip(), value.strip()
            if key not in _ALL_FIELDS:
                raise ParseError(f"unknown config key {key!r}", line_no)
            values[key] = _coerce(key, value, line_no)
    return values


def build_train_config(config_path=None, overrides=None):
    """Defaults, then file values, then flag overrides."""
    values = {}
    if config_path:
        values.update(parse_config_file(config_path))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def _add_train_flags(p):
    for f in dataclasses.fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name in _BOOL_FIELDS:
            p.add_argument(flag, default=None, action=argparse.BooleanOptionalAction)
        else:
            p.add_argument(flag, default=None, type=lambda v, k=f.name: _coerce(k, v))


def _collect_overrides(args):
    return {f.name: getattr(args, f.name) for f in dataclasses.fields(TrainConfig)}


def _build_parser():
    top = argparse.ArgumentParser(prog="dcbilstm")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier")
    p.add_argument("--config", default=None, help="flat key = value settings file")
    _add_train_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="tsv", choices=["tsv", "sst_trees"])
    p.add_argument("--binary", action="store_true")
    p.add_argument("--batch-size", type=int, default=200)
    p.add_argument("--expect-min", type=float, default=None,
                   help="exit 1 unless accuracy reaches this floor")

    p = sub.add_parser("count-params", help="recurrent-layer parameter count")
    p.add_argument("--dl", type=int, required=True)
    p.add_argument("--dh", type=int, required=True)
    p.add_argument("--th", type=int, required=True)
    p.add_argument("--m", type=int, default=300)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--arch", default="dense", choices=["dense", "stacked"])
    p.add_argument("--dl", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-rel", type=float, default=1e-4)
    p.add_argument("--tol-abs", type=float, default=1e-7)
    p.add_argument("--inject-fault", action="store_true",
                   help="corrupt one analytic gradient to prove the check bites")

    p = sub.add_parser("prepare-data", help="convert raw corpora to label\\ttext tsv")
    p.add_argument("--format", required=True, choices=["sst", "lines"])
    p.add_argument("--out", required=True)
    p.add_argument("--input", default=None, help="tree file (sst format)")
    p.add_argument("--binary", action="store_true", help="collapse 5-way sentiment to 2")
    p.add_argument("--phrases", action="store_true", help="emit every labeled phrase")
    p.add_argument("--raw", action="append", default=[], metavar="PATH:LABEL",
                   help="one-sentence-per-line file with a shared label (repeatable)")
    p.add_argument("--encoding", default="utf-8")

    p = sub.add_parser("sweep", help="run or preview a depth/width table")
    p.add_argument("--table", required=True, choices=sorted(SWEEP_TABLES))
    p.add_argument("--dry-run", action="store_true", help="print rows and counts only")
    p.add_argument("--config", default=None)
    _add_train_flags(p)
    return top


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_train(args):
    cfg = build_train_config(args.config, _collect_overrides(args))
    report = train(cfg)
    if report.fold_accs is not None:
        for i, acc in enumerate(report.fold_accs):
            print(f"fold{i} accuracy {acc:.4f}")
        print(f"mean accuracy {report.mean_acc:.4f}")
    else:
        line = f"train accuracy {report.final_train_acc:.4f}"
        if report.best_dev_acc is not None:
            line += f", dev accuracy {report.best_dev_acc:.4f}"
        if report.test_acc is not None:
            line += f", test accuracy {report.test_acc:.4f}"
        print(line)
    print(f"checkpoint {report.checkpoint_path}")
    print(f"log {report.log_path}")
    return 0


def _cmd_eval(args):
    model, meta = load_checkpoint(args.checkpoint)
    if meta["vocab"] is None:
        raise ConfigError(f"{args.checkpoint} has no vocab section; cannot embed text")
    examples = D.load_dataset(args.data, args.format, binary=args.binary)
    indexed = D.vectorize(examples, meta["vocab"], drop_unknown=True)
    acc = evaluate(model, meta["emb_matrix"], indexed, args.batch_size)
    print(f"accuracy {acc:.4f}")
    if args.expect_min is not None and acc < args.expect_min:
        print(f"accuracy {acc:.4f} below required {args.expect_min:.4f}", file=sys.stderr)
        return 1
    return 0


def _cmd_count_params(args):
    n = count_params(args.m, args.dl, args.dh, args.th)
    print(f"{n} ({format_param_count(n)})")
    return 0


def _cmd_gradcheck(args):
    report = check_model(
        arch=args.arch, dl=args.dl, seed=args.seed,
        tol_rel=args.tol_rel, tol_abs=args.tol_abs,
        inject_fault=args.inject_fault,
    )
    print(report.format())
    return 0 if report.passed else 1


def _cmd_prepare_data(args):
    if args.format == "sst":
        if not args.input:
            raise ConfigError("sst format needs --input")
        examples = D.load_dataset(args.input, "sst_trees",
                                  binary=args.binary, phrases=args.phrases)
    else:
        if not args.raw:
            raise ConfigError("lines format needs at least one --raw PATH:LABEL")
        examples = []
        for spec_arg in args.raw:
            path, sep, label = spec_arg.rpartition(":")
            if not sep:
                raise ConfigError(f"--raw wants PATH:LABEL, got {spec_arg!r}")
            examples.extend(D.load_label_lines(path, int(label), encoding=args.encoding))
    with open(args.out, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(f"{ex.label}\t{' '.join(ex.tokens)}\n")
    print(f"wrote {len(examples)} examples to {args.out}")
    return 0


def _cmd_sweep(args):
    rows = SWEEP_TABLES[args.table]
    if args.dry_run:
        print(f"table {args.table} (m=300)")
        for dl, dh, th in rows:
            n = count_params(300, dl, dh, th)
            print(f"  dl={dl:<3d} dh={dh:<3d} th={th:<4d} params {n} ({format_param_count(n)})")
        return 0
    overrides = _collect_overrides(args)
    results = []
    for dl, dh, th in rows:
        row = dict(overrides)
        # a zero-width layer contributes nothing; run it as depth zero
        row.update({"dl": 0 if dh == 0 else dl, "dh": dh, "th": th})
        cfg = build_train_config(args.config, row)
        cfg.out_dir = f"{cfg.out_dir}/{args.table}_dl{dl}_dh{dh}_th{th}"
        report = train(cfg)
        acc = report.mean_acc if report.mean_acc is not None else (
            report.test_acc if report.test_acc is not None else report.best_dev_acc)
        results.append((dl, dh, th, acc))
        print(f"  dl={dl:<3d} dh={dh:<3d} th={th:<4d} accuracy "
              f"{'n/a' if acc is None else f'{acc:.4f}'}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "eval": _cmd_eval,
        "count-params": _cmd_count_params,
        "gradcheck": _cmd_gradcheck,
        "prepare-data": _cmd_prepare_data,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ParseError, CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
