"""Command-line entry point.

Exit codes: 0 success, 1 usage/config/data error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from . import bench, config
from .data import (
    SYNTHETIC_KINDS,
    atomic_write_text,
    denormalize,
    gen_synthetic,
    load_csv,
    minmax_normalize,
    write_csv,
)
from .errors import ConfigError, DataError, ImputeLabError
from .metrics import EvaluationReport, evaluate_variable, failed_row, render

METHOD_CHOICES = {"em": "EM", "nnga": "NNGA"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imputelab", description="Autoencoder+GA vs EM missing-data imputation")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run a full comparison experiment")
    run.add_argument("--config", help="experiment config file (key = value)")
    run.add_argument("--method", choices=sorted(METHOD_CHOICES), action="append",
                     help="restrict to one method (repeatable)")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--tolerance", type=float, help="relative tolerance, e.g. 0.1")
    run.add_argument("--out", help="report path (default: stdout)")
    run.add_argument("--format", choices=["csv", "text"])
    run.add_argument("--artifacts", help="directory for per-column input/truth/config files")

    imp = sub.add_parser("impute", help="fill the missing cells of a CSV")
    imp.add_argument("--in", dest="input", required=True, help="input CSV")
    imp.add_argument("--method", choices=sorted(METHOD_CHOICES), required=True)
    imp.add_argument("--config", help="config file supplying model settings")
    imp.add_argument("--seed", type=int, help="seed for MLP init and GA")
    imp.add_argument("--out", required=True, help="output CSV")

    gen = sub.add_parser("gen", help="write a synthetic dataset")
    gen.add_argument("--kind", choices=SYNTHETIC_KINDS, required=True)
    gen.add_argument("--rows", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="score a completed CSV against removed values")
    ev.add_argument("--in", dest="input", required=True, help="completed CSV")
    ev.add_argument("--truth", required=True, help="CSV with row,col,value")
    ev.add_argument("--method", choices=sorted(METHOD_CHOICES), required=True)
    ev.add_argument("--tolerance", type=float, default=0.10)
    ev.add_argument("--format", choices=["csv", "text"], default="text")
    ev.add_argument("--out", help="report path (default: stdout)")
    return p


def _emit(text, path):
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = config.load(args.config) if args.config else config.ExperimentConfig()
    changes = {}
    if args.method:
        changes["methods"] = tuple(dict.fromkeys(METHOD_CHOICES[m] for m in args.method))
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.tolerance is not None:
        changes["tolerance"] = args.tolerance
    if args.out is not None:
        changes["output_path"] = args.out
    if args.format is not None:
        changes["output_format"] = args.format
    if args.artifacts is not None:
        changes["artifacts_dir"] = args.artifacts
    cfg = replace(cfg, **changes)
    report = bench.run_experiment(cfg)
    if not cfg.output_path:
        sys.stdout.write(render(report, cfg.output_format))
    return 0


def impute_table(ds, method: str, cfg):
    """Impute a table as the ``impute`` subcommand does; returns the completed table."""
    work = ds
    params = None
    if cfg.normalize:
        work, params = minmax_normalize(ds)
    if method == "EM":
        completed = bench.impute_em(work, cfg.em)
    else:
        model = bench.train_autoencoder(work, cfg.mlp, cfg.restarts)
        completed = bench.impute_nnga(work, model, cfg.ga)
    if params is not None:
        completed = denormalize(completed, params)
        # observed cells are copied back verbatim rather than round-tripped
        completed = completed.replace(values=np.where(ds.mask, ds.values, completed.values))
    return completed


def cmd_impute(args) -> int:
    cfg = config.load(args.config) if args.config else config.ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, mlp=replace(cfg.mlp, seed=args.seed), ga=replace(cfg.ga, seed=args.seed))
    ds = load_csv(args.input, cfg.has_header, cfg.missing_token)
    if ds.mask.all():
        write_csv(ds, args.out, cfg.missing_token)
        return 0
    completed = impute_table(ds, METHOD_CHOICES[args.method], cfg)
    write_csv(completed, args.out, cfg.missing_token)
    return 0


def cmd_gen(args) -> int:
    write_csv(gen_synthetic(args.kind, args.rows, seed=args.seed), args.out)
    return 0


def load_truth(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"row", "col", "value"}:
            raise DataError(f"{path}: expected header row,col,value")
        try:
            return [(int(r["row"]), int(r["col"]), float(r["value"])) for r in reader]
        except (TypeError, ValueError) as err:
            raise DataError(f"{path}: {err}") from None


def cmd_eval(args) -> int:
    completed = load_csv(args.input)
    truth = load_truth(args.truth)
    method = METHOD_CHOICES[args.method]
    report = EvaluationReport(tolerance_fraction=args.tolerance)
    for c in sorted({t[1] for t in truth}):
        if not 0 <= c < completed.n_cols:
            raise DataError(f"truth refers to column {c}, table has {completed.n_cols}")
        col_truth = [t for t in truth if t[1] == c]
        name = completed.columns[c]
        try:
            report.add(evaluate_variable(col_truth, completed, method, args.tolerance, name))
        except DataError as err:
            report.add(failed_row(name, method, err))
    if not report.rows:
        raise DataError("truth file is empty")
    _emit(render(report, args.format), args.out)
    return 0


COMMANDS = {"run": cmd_run, "impute": cmd_impute, "gen": cmd_gen, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "imputelab: error: a subcommand is required")
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except (ConfigError, DataError, ImputeLabError, OSError) as err:
        print(f"imputelab: error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001
        print(f"imputelab: internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
