"""Datasets with an explicit missingness mask, CSV I/O, scaling, splitting,
MCAR injection and synthetic generators."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import (
    AllMissingColumn,
    ColumnAlreadyMissing,
    DimensionMismatch,
    EmptySplit,
    MaskedCellError,
    ParseError,
    RaggedRows,
)

SYNTHETIC_KINDS = ("linear_gaussian", "nonlinear", "collinear", "independent")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Numeric table plus a boolean mask (True = observed).

    Masked cells hold NaN, but the mask is the only thing code should consult.
    """

    columns: tuple
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch("values must be a 2-d matrix")
        mask = np.asarray(self.mask, dtype=bool)
        if values.shape != mask.shape:
            raise DimensionMismatch(f"values {values.shape} vs mask {mask.shape}")
        if values.shape[1] != len(self.columns):
            raise DimensionMismatch(
                f"{len(self.columns)} column names for {values.shape[1]} columns"
            )
        values = np.where(mask, values, np.nan)
        object.__setattr__(self, "columns", tuple(str(c) for c in self.columns))
        object.__setattr__(self, "values", _frozen(values, np.float64))
        object.__setattr__(self, "mask", _frozen(mask, bool))

    @classmethod
    def from_array(cls, values, columns=None, mask=None) -> "Dataset":
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if columns is None:
            columns = [f"x{j}" for j in range(values.shape[1])]
        if mask is None:
            mask = np.isfinite(values)
        return cls(tuple(columns), values, mask)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def complete_rows(self) -> np.ndarray:
        return self.mask.all(axis=1)

    def get(self, row: int, col: int) -> float:
        if not self.mask[row, col]:
            raise MaskedCellError(row, col)
        return float(self.values[row, col])

    def observed(self, col: int) -> np.ndarray:
        return self.values[self.mask[:, col], col]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.columns, self.values[rows], self.mask[rows])

    def replace(self, values=None, mask=None) -> "Dataset":
        return Dataset(
            self.columns,
            self.values if values is None else values,
            self.mask if mask is None else mask,
        )


def concat_rows(first: Dataset, second: Dataset) -> Dataset:
    if first.columns != second.columns:
        raise DimensionMismatch("column schemas differ")
    return Dataset(
        first.columns,
        np.vstack([first.values, second.values]),
        np.vstack([first.mask, second.mask]),
    )


# --------------------------------------------------------------------------
# CSV


def load_csv(path, has_header: bool = True, missing_token: str = "") -> Dataset:
    """Read a comma-separated numeric table.

    Rows and columns in ``ParseError`` are 0-based positions in the file, so a
    header occupies row 0.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = None
    start = 0
    if has_header and rows:
        header = [h.strip() for h in rows[0]]
        start = 1
    nonblank = [r for r in rows if r]
    width = len(header) if header is not None else (len(nonblank[0]) if nonblank else 0)
    # a blank line is a lone missing cell in a one-column table, noise otherwise
    rows = rows[:start] + [r or [""] for r in rows[start:] if r or width == 1]

    values = np.empty((len(rows) - start, width))
    mask = np.ones((len(rows) - start, width), dtype=bool)
    for i, row in enumerate(rows[start:]):
        if len(row) != width:
            raise RaggedRows(f"row {i + start} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            text = cell.strip()
            if text == missing_token:
                mask[i, j] = False
                values[i, j] = np.nan
                continue
            try:
                values[i, j] = float(text)
            except ValueError:
                raise ParseError(i + start, j, cell) from None

    if header is None:
        header = [f"x{j}" for j in range(width)]
    return Dataset(tuple(header), values, mask)


def format_value(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_to_csv(ds: Dataset, missing_token: str = "") -> str:
    lines = [",".join(ds.columns)]
    for i in range(ds.n_rows):
        cells = [
            format_value(ds.values[i, j]) if ds.mask[i, j] else missing_token
            for j in range(ds.n_cols)
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(ds: Dataset, path, missing_token: str = "") -> None:
    atomic_write_text(path, dataset_to_csv(ds, missing_token))


# --------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = _frozen(self.mins, np.float64)
        maxs = _frozen(self.maxs, np.float64)
        if mins.shape != maxs.shape:
            raise DimensionMismatch("mins and maxs differ in length")
        if np.any(mins > maxs):
            raise ValueError("min > max in normalization params")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def degenerate(self) -> np.ndarray:
        return self.mins == self.maxs


def minmax_normalize(ds: Dataset) -> tuple[Dataset, NormalizationParams]:
    mins = np.empty(ds.n_cols)
    maxs = np.empty(ds.n_cols)
    for j in range(ds.n_cols):
        obs = ds.observed(j)
        if obs.size == 0:
            raise AllMissingColumn(j)
        mins[j], maxs[j] = obs.min(), obs.max()
    span = maxs - mins
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (ds.values - mins) / safe, 0.0)
    return ds.replace(values=scaled), NormalizationParams(mins, maxs)


def denormalize(ds: Dataset, params: NormalizationParams) -> Dataset:
    if params.mins.shape[0] != ds.n_cols:
        raise DimensionMismatch(
            f"params cover {params.mins.shape[0]} columns, dataset has {ds.n_cols}"
        )
    span = params.maxs - params.mins
    restored = np.where(params.degenerate, params.mins, ds.values * span + params.mins)
    return ds.replace(values=restored)


# --------------------------------------------------------------------------
# splitting and missingness


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 1.0 / 7.0
    seed: int = 0
    shuffle: bool = False

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


def split_indices(n_rows: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    n_test = math.floor(n_rows * spec.test_fraction + 1e-9)
    if n_rows < 2 or n_test < 1 or n_test >= n_rows:
        raise EmptySplit(f"{n_rows} rows with test_fraction {spec.test_fraction}")
    order = np.arange(n_rows)
    if spec.shuffle:
        order = np.random.default_rng(spec.seed).permutation(n_rows)
    return order[: n_rows - n_test], order[n_rows - n_test :]


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition rows; without shuffling the test set is the tail of the table."""
    train_idx, test_idx = split_indices(ds.n_rows, spec)
    return ds.take(train_idx), ds.take(test_idx)


@dataclass(frozen=True)
class MissingnessSpec:
    target_columns: Sequence[int]
    fraction: float = 1.0
    seed: int = 0
    mechanism: str = "MCAR"

    def __post_init__(self):
        if self.mechanism != "MCAR":
            raise ValueError(f"unsupported mechanism {self.mechanism!r}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must lie in (0, 1]")
        object.__setattr__(self, "target_columns", tuple(sorted(set(self.target_columns))))


def inject_missing(ds: Dataset, spec: MissingnessSpec):
    """Mask ``ceil(fraction * n_rows)`` cells per target column, MCAR.

    Positions are drawn from the seed alone. Returns the corrupted dataset and
    ``(row, col, value)`` triples of the removed cells ordered by column, row.
    """
    n_mask = math.ceil(spec.fraction * ds.n_rows - 1e-9)
    rng = np.random.default_rng(spec.seed)
    mask = ds.mask.copy()
    truth = []
    for col in spec.target_columns:
        if not 0 <= col < ds.n_cols:
            raise IndexError(f"column {col} out of range")
        if not ds.mask[:, col].all():
            raise ColumnAlreadyMissing(col)
        rows = np.sort(rng.choice(ds.n_rows, size=n_mask, replace=False))
        mask[rows, col] = False
        truth.extend((int(r), col, float(ds.values[r, col])) for r in rows)
    return ds.replace(mask=mask), truth


# --------------------------------------------------------------------------
# synthetic data


def synthetic_params() -> dict:
    text = resources.files("imputelab").joinpath("synthetic.json").read_text()
    return json.loads(text)


def gen_synthetic(kind: str, n_rows: int, seed: int = 0) -> Dataset:
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")
    if n_rows < 10:
        raise ValueError("n_rows must be at least 10")
    params = synthetic_params()
    rng = np.random.default_rng(seed)

    if kind == "linear_gaussian":
        p = params["linear_gaussian"]
        x = rng.multivariate_normal(p["mean"], p["covariance"], size=n_rows)
    elif kind == "nonlinear":
        sd = params["nonlinear"]["noise_sd"]
        x0, x1 = rng.uniform(size=(2, n_rows))
        noise = rng.normal(0.0, sd, size=(3, n_rows))
        x = np.column_stack([
            x0,
            x1,
            np.sin(np.pi * x0) + noise[0],
            x0 * x1 + noise[1],
            np.exp(x1) + noise[2],
        ])
        x, _ = minmax_normalize(Dataset.from_array(x))
        return x
    elif kind == "collinear":
        p = params["collinear"]
        lg = params["linear_gaussian"]
        x = rng.multivariate_normal(lg["mean"], lg["covariance"], size=n_rows)
        x[:, 0] = p["slope"] * x[:, 1] + p["intercept"]
    else:
        x = rng.uniform(size=(n_rows, params["independent"]["n_cols"]))
    return Dataset.from_array(x)
