"""End-to-end comparison: data -> normalise -> split -> inject -> fit ->
impute -> score, one experiment per target column.

EM is fitted on the training rows with the corrupted test rows appended, so
both methods see the same training data and are scored on the same test cells.
The autoencoder is trained on the complete training rows only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import config as config_mod
from . import em, mlp, nnga
from .data import (
    Dataset,
    MissingnessSpec,
    SplitSpec,
    atomic_write_text,
    concat_rows,
    format_value,
    gen_synthetic,
    inject_missing,
    load_csv,
    minmax_normalize,
    split,
    write_csv,
)
from .errors import DataError, ImputeLabError
from .metrics import EvaluationReport, evaluate_variable, failed_row, render

# labels mixed into the master seed for each source of randomness
_DATA, _SPLIT, _INJECT, _MLP, _GA = 1, 2, 3, 4, 5
METHOD_ERRORS = (ImputeLabError, ValueError, np.linalg.LinAlgError)


def derive_seed(master: int, *labels: int) -> int:
    ss = np.random.SeedSequence([int(master), *(int(v) for v in labels)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def load_dataset(cfg) -> Dataset:
    if cfg.source == "csv":
        return load_csv(cfg.path, cfg.has_header, cfg.missing_token)
    return gen_synthetic(cfg.kind, cfg.rows, seed=derive_seed(cfg.seed, _DATA))


def resolve_columns(ds: Dataset, targets) -> list:
    if targets is None:
        return list(range(ds.n_cols))
    out = []
    for t in targets:
        if t in ds.columns:
            out.append(ds.columns.index(t))
        elif t.lstrip("-").isdigit() and 0 <= int(t) < ds.n_cols:
            out.append(int(t))
        else:
            raise DataError(f"unknown target column {t!r}")
    return out


def autoencoder_config(n_inputs: int, base: mlp.MlpConfig, seed: int) -> mlp.MlpConfig:
    hidden = base.n_hidden if base.n_hidden > 0 else max(1, n_inputs - 1)
    return replace(base, n_inputs=n_inputs, n_hidden=hidden, n_outputs=None, seed=seed)


def train_autoencoder(ds: Dataset, mlp_cfg: mlp.MlpConfig, restarts: int = 1) -> mlp.MlpModel:
    """Train on the complete rows; with ``restarts > 1`` the net is trained
    from seeds ``seed, seed+1, ...`` and the lowest final training loss wins."""
    rows = ds.values[ds.complete_rows]
    if rows.shape[0] < 2:
        raise DataError("need at least two complete rows to train the autoencoder")
    best, best_loss = None, np.inf
    for k in range(max(1, restarts)):
        cfg = autoencoder_config(ds.n_cols, mlp_cfg, (mlp_cfg.seed + k) % 2**64)
        model, _ = mlp.train(mlp.init(cfg), rows)
        loss, _ = mlp.loss_and_gradients(model, rows, rows)
        if loss < best_loss:
            best, best_loss = model, loss
    return best


def impute_em(ds: Dataset, em_cfg: em.EmConfig) -> Dataset:
    model = em.em_fit(ds, em_cfg)
    return em.em_impute(ds, model, em_cfg.pd_epsilon)


def impute_nnga(ds: Dataset, model, ga_cfg) -> Dataset:
    completed, _ = nnga.impute_dataset(ds, model, ga_cfg)
    return completed


# --------------------------------------------------------------------------


@dataclass
class Case:
    """One injection experiment: which columns were masked and what each
    method produced for the test rows (a Dataset, or the exception raised)."""

    columns: list
    combined: Dataset
    truth: list  # (row in test split, col, value)
    n_train: int
    mlp_seed: int
    ga_seed: int
    outputs: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    report: EvaluationReport
    cases: list
    data: Dataset


def run_experiment_detailed(cfg) -> ExperimentResult:
    cfg.validate()
    ds = load_dataset(cfg)
    if cfg.normalize:
        ds, _ = minmax_normalize(ds)
    train, test = split(ds, SplitSpec(cfg.test_fraction, derive_seed(cfg.seed, _SPLIT), cfg.shuffle))
    targets = resolve_columns(ds, cfg.target_columns)
    if cfg.missing_mode == "per_column":
        groups = [([c], derive_seed(cfg.seed, _INJECT, c + 1)) for c in targets]
    else:
        groups = [(targets, derive_seed(cfg.seed, _INJECT, 0))]

    mlp_seed = derive_seed(cfg.seed, _MLP)
    autoencoder, ae_error = None, None
    if "NNGA" in cfg.methods:
        try:
            autoencoder = train_autoencoder(train, replace(cfg.mlp, seed=mlp_seed), cfg.restarts)
        except METHOD_ERRORS as err:
            ae_error = err

    report = EvaluationReport(tolerance_fraction=cfg.tolerance)
    cases = []
    for cols, inject_seed in groups:
        corrupted, truth = inject_missing(test, MissingnessSpec(cols, cfg.missing_fraction, inject_seed))
        combined = concat_rows(train, corrupted)
        ga_seed = derive_seed(cfg.seed, _GA, cols[0] + 1 if len(cols) == 1 else 0)
        case = Case(cols, combined, truth, train.n_rows, mlp_seed, ga_seed)

        for method in ("EM", "NNGA"):
            if method not in cfg.methods:
                continue
            try:
                if method == "EM":
                    completed = impute_em(combined, cfg.em)
                else:
                    if ae_error is not None:
                        raise ae_error
                    completed = impute_nnga(combined, autoencoder, replace(cfg.ga, seed=ga_seed))
                case.outputs[method] = completed.take(np.arange(train.n_rows, combined.n_rows))
            except METHOD_ERRORS as err:
                case.outputs[method] = err

        for c in cols:
            col_truth = [t for t in truth if t[1] == c]
            for method in ("EM", "NNGA"):
                if method not in case.outputs:
                    continue
                out = case.outputs[method]
                if isinstance(out, BaseException):
                    report.add(failed_row(ds.columns[c], method, out))
                else:
                    report.add(evaluate_variable(col_truth, out, method, cfg.tolerance, ds.columns[c]))
        cases.append(case)

    if cfg.artifacts_dir:
        write_artifacts(cfg, cases, ds)
    if cfg.output_path:
        atomic_write_text(cfg.output_path, render(report, cfg.output_format))
    return ExperimentResult(report, cases, ds)


def run_experiment(cfg) -> EvaluationReport:
    return run_experiment_detailed(cfg).report


def truth_to_csv(truth, offset: int = 0) -> str:
    lines = ["row,col,value"]
    lines += [f"{r + offset},{c},{format_value(v)}" for r, c, v in truth]
    return "\n".join(lines) + "\n"


def write_artifacts(cfg, cases, ds: Dataset) -> None:
    """Per case: the combined (normalised, corrupted) table, the removed
    values indexed into that table, and a config that makes ``impute``
    reproduce the run's imputations exactly."""
    os.makedirs(cfg.artifacts_dir, exist_ok=True)
    for case in cases:
        stem = os.path.join(cfg.artifacts_dir, "case-" + "-".join(ds.columns[c] for c in case.columns))
        write_csv(case.combined, stem + ".input.csv")
        atomic_write_text(stem + ".truth.csv", truth_to_csv(case.truth, case.n_train))
        resolved = replace(
            cfg,
            source="csv",
            path=os.path.abspath(stem + ".input.csv"),
            normalize=False,
            mlp=replace(cfg.mlp, seed=case.mlp_seed),
            ga=replace(cfg.ga, seed=case.ga_seed),
            output_path="",
            artifacts_dir="",
        )
        atomic_write_text(stem + ".cfg", config_mod.to_text(resolved))
