"""Command-line front end.

Subcommands
-----------
train    fit one tree and write tree/report/manifest/event-log files
predict  apply a saved tree to a delimited file
pareto   sweep the branching budget and write the accuracy/size frontier
bench    run seeded train/test splits and report mean +/- stdev tables

Exit codes: 0 success, 2 usage error, 3 data error, 4 time limit hit
with no feasible tree.  ``OBLITREE_TIME_LIMIT`` (seconds) and
``OBLITREE_THREADS`` override the corresponding settings.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .data import (
    Dataset,
    RawTable,
    TableEncoder,
    fingerprint,
    load,
    load_column_overrides,
    split_permutation,
)
from .errors import DataError
from .master import (
    BranchBudgetObjective,
    LexicographicObjective,
    WeightedObjective,
)
from .svm import ObliqueTree
from .trainer import (
    LAMBDA_GRID,
    TrainConfig,
    TrainReport,
    evaluate,
    pareto_sweep,
    train,
    tune_lambda,
)

_ENCODER_MARK = "---encoder---"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NO_INCUMBENT = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="delimited data file")
    p.add_argument("--target", default="class", help="target column name")
    p.add_argument("--delimiter", default=",", help="cell delimiter (default ',')")
    p.add_argument("--column-types", help="key=value file forcing column kinds")
    p.add_argument("--depth", type=int, default=2, help="tree depth (>= 1)")
    p.add_argument("--model", choices=("cutw", "cut"), default="cutw",
                   help="path-cut family")
    p.add_argument("--frac", choices=("off", "1", "2", "3"), default="1",
                   help="fractional cuts: off, 1=all, 2=first, 3=most violated")
    p.add_argument("--balanced", action="store_true",
                   help="force a full tree (no pruning)")
    p.add_argument("--time-limit", type=float, default=900.0,
                   help="solver budget in seconds")
    p.add_argument("--seed", type=int, default=0, help="seed for splits")
    p.add_argument("--svm-c", type=float, default=1000.0,
                   help="soft-margin box bound for hyperplane recovery")
    p.add_argument("--mis-rounds", type=int, default=5,
                   help="infeasibility certificates per vertex and candidate")
    p.add_argument("--out", default="oblitree-out", help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oblitree",
        description="optimal oblique classification trees by branch and cut",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a tree on one file")
    _add_common(p_train)
    mode = p_train.add_mutually_exclusive_group()
    mode.add_argument("--lambda", dest="lam", type=float, default=None,
                      help="sparsity weight in [0, 1] (weighted objective)")
    mode.add_argument("--tune", action="store_true",
                      help="pick the sparsity weight on a calibration subset")
    mode.add_argument("--lex", action="store_true",
                      help="lexicographic: accuracy first, then tree size")
    mode.add_argument("--pareto", action="store_true",
                      help="sweep the branching budget instead of one fit")
    p_train.add_argument("--degradation", type=float, default=0.0,
                         help="allowed primary-objective loss for --lex")

    p_pred = sub.add_parser("predict", help="apply a saved tree")
    p_pred.add_argument("--tree", required=True, help="tree file from train")
    p_pred.add_argument("--data", required=True, help="delimited data file")
    p_pred.add_argument("--delimiter", default=",")
    p_pred.add_argument("--out", default="predictions.csv")

    p_par = sub.add_parser("pareto", help="accuracy/size frontier")
    _add_common(p_par)

    p_bench = sub.add_parser("bench", help="seeded train/test split protocol")
    _add_common(p_bench)
    p_bench.add_argument("--splits", type=int, default=5,
                         help="number of seeded splits (default 5)")
    p_bench.add_argument("--train-fraction", type=float, default=0.75)
    p_bench.add_argument("--normalize-on-train", action="store_true",
                         help="fit encode/normalize statistics on the training"
                              " split only (default: on the full file)")
    p_bench.add_argument("--tune", action="store_true",
                         help="tune the sparsity weight per split")
    return parser


_FRAC_NAMES = {"off": "off", "1": "all", "2": "first", "3": "best"}


def _config_from_args(args, objective) -> TrainConfig:
    time_limit = float(os.environ.get("OBLITREE_TIME_LIMIT", args.time_limit))
    return TrainConfig(
        depth=args.depth,
        formulation=args.model,
        objective=objective,
        balanced=args.balanced,
        fractional=_FRAC_NAMES[args.frac],
        time_limit=time_limit,
        mis_rounds=args.mis_rounds,
        svm_c=args.svm_c,
        seed=args.seed,
    )


def _load_dataset(args) -> tuple[Dataset, TableEncoder, RawTable]:
    overrides = load_column_overrides(args.column_types) if args.column_types else None
    table = load(args.data, target=args.target, delimiter=args.delimiter)
    encoder = TableEncoder().fit(table, overrides)
    return encoder.transform(table), encoder, table


def _manifest(args, config: TrainConfig, timings: dict) -> dict:
    cfg = asdict(config)
    cfg["objective"] = repr(config.objective)
    return {
        "command": args.command,
        "config": cfg,
        "data": {"path": args.data, "sha256": fingerprint(args.data)},
        "seed": args.seed,
        "versions": {
            "oblitree": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "threads": int(os.environ.get("OBLITREE_THREADS", "1")),
        "timings": timings,
    }


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit_outputs(out_dir, args, config, report: TrainReport,
                  encoder: TableEncoder, events: list[str], timings: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    tree_text = report.tree.to_text() + _ENCODER_MARK + "\n" + encoder.to_text()
    _write(os.path.join(out_dir, "tree.txt"), tree_text)
    _write(os.path.join(out_dir, "report.txt"), report.to_text())
    _write(os.path.join(out_dir, "events.log"), "\n".join(events) + ("\n" if events else ""))
    pool_lines = ["seconds,correct,misclassified,branching"]
    pool_lines += [
        f"{p.seconds:.3f},{p.correct},{p.misclassified},{p.branching}"
        for p in report.pool_trace
    ]
    _write(os.path.join(out_dir, "pool.csv"), "\n".join(pool_lines) + "\n")
    manifest = _manifest(args, config, timings)
    _write(os.path.join(out_dir, "manifest.json"),
           json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _cmd_train(args) -> int:
    data, encoder, _table = _load_dataset(args)
    events: list[str] = []
    t0 = time.perf_counter()

    if args.pareto:
        config = _config_from_args(args, BranchBudgetObjective(0))
        entries = pareto_sweep(data, config, event_sink=events.append)
        out_dir = args.out
        os.makedirs(out_dir, exist_ok=True)
        lines = ["budget,correct,accuracy_pct,seconds,gap,dominated"]
        lines += [
            f"{e.budget},{e.correct},{e.accuracy:.6f},{e.seconds:.3f},{e.gap:.6g},"
            f"{int(e.dominated)}"
            for e in entries
        ]
        _write(os.path.join(out_dir, "frontier.csv"), "\n".join(lines) + "\n")
        manifest = _manifest(args, config, {"total_seconds": time.perf_counter() - t0})
        _write(os.path.join(out_dir, "manifest.json"),
               json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        _write(os.path.join(out_dir, "events.log"),
               "\n".join(events) + ("\n" if events else ""))
        for line in lines:
            print(line)
        return EXIT_OK

    if args.lex:
        objective = LexicographicObjective(args.degradation)
        config = _config_from_args(args, objective)
    elif args.tune:
        config = _config_from_args(args, WeightedObjective(0.0))
        best = tune_lambda(data, config, LAMBDA_GRID)
        events.append(f"tuned lambda={best}")
        config = _config_from_args(args, WeightedObjective(best))
    else:
        lam = 0.0 if args.lam is None else args.lam
        config = _config_from_args(args, WeightedObjective(lam))

    report = train(data, config, event_sink=events.append)
    timings = {"total_seconds": time.perf_counter() - t0,
               "solve_seconds": report.solve_seconds}
    _emit_outputs(args.out, args, config, report, encoder, events, timings)
    print(report.to_text(), end="")
    print(f"tree written to {os.path.join(args.out, 'tree.txt')}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    with open(args.tree, encoding="utf-8") as fh:
        text = fh.read()
    if _ENCODER_MARK not in text:
        raise DataError(f"{args.tree}: missing encoder block")
    tree_text, enc_text = text.split(_ENCODER_MARK + "\n", 1)
    encoder = TableEncoder.from_text(enc_text)
    tree = ObliqueTree.from_text(tree_text)

    raw = load_any(args.data, args.delimiter)
    has_labels = encoder.target in raw.columns
    table = RawTable(raw.columns, raw.rows,
                     encoder.target if has_labels else raw.columns[0])
    data = encoder.transform(table, require_target=has_labels)

    idx = tree.predict(data.X)
    names = encoder.class_names
    lines = ["row,predicted"]
    lines += [f"{r},{names[k]}" for r, k in enumerate(idx)]
    _write(args.out, "\n".join(lines) + "\n")
    print(f"predictions written to {args.out}")
    if has_labels:
        acc = 100.0 * float(np.mean(idx == data.y))
        print(f"accuracy_pct {acc:.6f}")
    return EXIT_OK


def load_any(path: str, delimiter: str) -> RawTable:
    """Parse a delimited file without requiring any particular column."""
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh, delimiter=delimiter)
        try:
            columns = [c.strip() for c in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [[c.strip() for c in row] for row in reader if row]
    return RawTable(columns, rows, columns[0])


def _cmd_pareto(args) -> int:
    args.pareto = True
    args.lam = None
    args.tune = False
    args.lex = False
    return _cmd_train(args)


def _cmd_bench(args) -> int:
    overrides = load_column_overrides(args.column_types) if args.column_types else None
    table = load(args.data, target=args.target, delimiter=args.delimiter)
    t0 = time.perf_counter()
    rows = []
    for k in range(args.splits):
        seed = args.seed + k
        order = split_permutation(table.n_rows, seed)
        n_train = int(round(args.train_fraction * table.n_rows))
        train_rows, test_rows = order[:n_train], order[n_train:]
        if args.normalize_on_train:
            encoder = TableEncoder().fit(table.subset(train_rows), overrides)
        else:
            encoder = TableEncoder().fit(table, overrides)
        train_data = encoder.transform(table.subset(train_rows))
        test_data = encoder.transform(table.subset(test_rows))
        config = replace(_config_from_args(args, WeightedObjective(0.0)), seed=seed)
        if args.tune:
            lam = tune_lambda(train_data, config, LAMBDA_GRID)
            config = replace(config, objective=WeightedObjective(lam))
        report = train(train_data, config, test_data=test_data)
        out_acc = report.out_of_sample_accuracy
        rows.append(
            (seed, report.solve_seconds, 100.0 * report.gap,
             report.in_sample_accuracy,
             float("nan") if out_acc is None else out_acc,
             report.branching_count)
        )

    def mean_std(vals):
        arr = np.array(vals, dtype=float)
        return float(arr.mean()), float(arr.std())

    header = "seed,solve_seconds,gap_pct,in_sample_pct,out_sample_pct,branching"
    lines = [header]
    lines += [f"{r[0]},{r[1]:.3f},{r[2]:.6f},{r[3]:.6f},{r[4]:.6f},{r[5]}" for r in rows]
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "bench.csv"), "\n".join(lines) + "\n")

    summary = ["metric,mean,stdev"]
    for name, col in (("solve_seconds", 1), ("gap_pct", 2),
                      ("in_sample_pct", 3), ("out_sample_pct", 4)):
        m, s = mean_std([r[col] for r in rows])
        summary.append(f"{name},{m:.6f},{s:.6f}")
    _write(os.path.join(args.out, "bench_summary.csv"), "\n".join(summary) + "\n")

    config = _config_from_args(args, WeightedObjective(0.0))
    manifest = _manifest(args, config, {"total_seconds": time.perf_counter() - t0})
    _write(os.path.join(args.out, "manifest.json"),
           json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for line in summary:
        print(line)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "predict":
            return _cmd_predict(args)
        if args.command == "pareto":
            return _cmd_pareto(args)
        if args.command == "bench":
            return _cmd_bench(args)
        parser.error(f"unknown command {args.command!r}")
    except TimeoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_INCUMBENT
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
