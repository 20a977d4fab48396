"""Imputation scoring: Pearson correlation and accuracy within a relative
tolerance, plus the per-variable report and its CSV/text renderings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import LengthMismatch, MissingPrediction, ZeroVariance

METHODS = ("EM", "NNGA")
METHOD_LABELS = {"EM": "EM", "NNGA": "NN-GA"}
NEAR_ZERO = 1e-9


def correlation(actual, predicted) -> float:
    x = np.asarray(actual, dtype=np.float64)
    y = np.asarray(predicted, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"lengths differ: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise LengthMismatch("need at least two pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0:
        raise ZeroVariance("actual")
    if syy == 0.0:
        raise ZeroVariance("predicted")
    r = float(np.sum(dx * dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def tolerance_accuracy(actual, predicted, tolerance_fraction: float = 0.10):
    """Percentage of predictions within ``tolerance_fraction`` of the true value.

    Relative to |actual|; for truths with |actual| < 1e-9 the tolerance is
    taken as an absolute distance instead. Returns ``(percent, n_within, n)``.
    """
    x = np.asarray(actual, dtype=np.float64)
    y = np.asarray(predicted, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"lengths differ: {x.shape} vs {y.shape}")
    if x.size < 1:
        raise LengthMismatch("need at least one pair")
    if not tolerance_fraction > 0:
        raise ValueError("tolerance_fraction must be positive")
    scale = np.where(np.abs(x) < NEAR_ZERO, 1.0, np.abs(x))
    within = int(np.count_nonzero(np.abs(y - x) <= tolerance_fraction * scale))
    return 100.0 * within / x.size, within, int(x.size)


def mean_absolute_error(actual, predicted) -> float:
    x = np.asarray(actual, dtype=np.float64)
    y = np.asarray(predicted, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {x.shape} vs {y.shape}")
    return float(np.mean(np.abs(y - x)))


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Failed:
    """Marker for a metric that could not be computed, with the reason."""

    cause: str

    def __str__(self):
        return "-"


@dataclass(frozen=True)
class ReportRow:
    variable: str
    method: str
    correlation: float | Failed
    accuracy_pct: float | Failed
    n_within: int = 0
    n_evaluated: int = 0
    n_absolute: int = 0  # truths near zero scored with the absolute tolerance


@dataclass
class EvaluationReport:
    rows: list = field(default_factory=list)
    tolerance_fraction: float = 0.10

    def add(self, row: ReportRow) -> None:
        self.rows.append(row)

    @property
    def variables(self) -> list:
        seen = []
        for r in self.rows:
            if r.variable not in seen:
                seen.append(r.variable)
        return seen

    @property
    def methods(self) -> list:
        present = {r.method for r in self.rows}
        return [m for m in METHODS if m in present]

    def cell(self, variable: str, method: str) -> ReportRow | None:
        for r in self.rows:
            if r.variable == variable and r.method == method:
                return r
        return None


def _cause(err) -> str:
    return f"{type(err).__name__}: {err}"


def failed_row(variable: str, method: str, err) -> ReportRow:
    f = Failed(_cause(err))
    return ReportRow(variable, method, f, f)


def evaluate_variable(ground_truth, completed: Dataset, method: str,
                      tolerance_fraction: float = 0.10, variable: str | None = None,
                      error: BaseException | None = None) -> ReportRow:
    """Score one variable's imputations against the removed true values.

    ``ground_truth`` holds ``(row, col, value)`` triples for a single column.
    Pass ``error`` when the imputer failed; the row is then all ``Failed``.
    """
    cols = {c for _, c, _ in ground_truth}
    if len(cols) > 1:
        raise ValueError(f"ground truth spans several columns: {sorted(cols)}")
    if variable is None:
        if not cols:
            raise ValueError("empty ground truth and no variable name given")
        variable = completed.columns[next(iter(cols))] if completed is not None else str(next(iter(cols)))
    if error is not None:
        return failed_row(variable, method, error)

    actual, predicted = [], []
    for r, c, v in ground_truth:
        if not completed.mask[r, c] or not np.isfinite(completed.values[r, c]):
            raise MissingPrediction(r, c)
        actual.append(v)
        predicted.append(completed.values[r, c])

    pct, n_within, n = tolerance_accuracy(actual, predicted, tolerance_fraction)
    n_abs = int(np.count_nonzero(np.abs(np.asarray(actual)) < NEAR_ZERO))
    try:
        corr = correlation(actual, predicted)
    except (ZeroVariance, LengthMismatch) as err:
        corr = Failed(_cause(err))
    return ReportRow(variable, method, corr, pct, n_within, n, n_abs)


# --------------------------------------------------------------------------
# rendering


def format_correlation(v) -> str:
    if isinstance(v, Failed):
        return "-"
    return f"{v:#.4g}"


def format_percent(v) -> str:
    if isinstance(v, Failed):
        return "-"
    return f"{v:.2f}"


def report_table(report: EvaluationReport) -> list:
    """Header plus one rendered row per variable, columns ordered as
    Variable, Corr <methods...>, <method> % ..."""
    methods = report.methods
    header = ["Variable"]
    header += [f"Corr {METHOD_LABELS[m]}" for m in methods]
    header += [f"{METHOD_LABELS[m]} %" for m in methods]
    table = [header]
    for var in report.variables:
        cells = [report.cell(var, m) for m in methods]
        line = [var]
        line += [format_correlation(c.correlation) if c else "" for c in cells]
        line += [format_percent(c.accuracy_pct) if c else "" for c in cells]
        table.append(line)
    return table


def render_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(report_table(report))
    return buf.getvalue()


def render_text(report: EvaluationReport) -> str:
    table = report_table(report)
    widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
    lines = []
    for k, row in enumerate(table):
        first = row[0].ljust(widths[0])
        rest = [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        lines.append("  ".join([first] + rest).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render(report: EvaluationReport, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown report format {fmt!r}")
