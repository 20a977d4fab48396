"""Autoencoder + GA imputation.

For a record with known part X_k and unknown part X_u, the GA searches X_u so
that the assembled vector is reproduced by the autoencoder: it minimises the
squared reconstruction residual summed over *all* components.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import ga
from .data import Dataset
from .errors import DimensionMismatch, SchemaMismatch
from .mlp import forward


@dataclass(frozen=True)
class ImputationProblem:
    record: np.ndarray
    known_mask: np.ndarray
    model: object  # anything exposing n_inputs and accepted by mlp.forward

    def __post_init__(self):
        record = np.array(self.record, dtype=np.float64)
        known = np.array(self.known_mask, dtype=bool)
        if record.shape != known.shape or record.ndim != 1:
            raise DimensionMismatch("record and known_mask must be equal-length vectors")
        if record.shape[0] != self.model.n_inputs:
            raise DimensionMismatch(
                f"record has {record.shape[0]} entries, model takes {self.model.n_inputs}"
            )
        if known.all():
            raise ValueError("record has no missing positions")
        if not known.any():
            raise ValueError("record has no observed positions; refusing to impute")
        record.setflags(write=False)
        known.setflags(write=False)
        object.__setattr__(self, "record", record)
        object.__setattr__(self, "known_mask", known)

    @property
    def missing_index(self) -> np.ndarray:
        return np.flatnonzero(~self.known_mask)

    def assemble(self, guesses) -> np.ndarray:
        """Full vectors with guesses placed in the missing slots (1-d or 2-d)."""
        guesses = np.asarray(guesses, dtype=np.float64)
        if guesses.shape[-1] != self.missing_index.size:
            raise DimensionMismatch(
                f"{guesses.shape[-1]} guesses for {self.missing_index.size} missing values"
            )
        x = np.broadcast_to(self.record, guesses.shape[:-1] + self.record.shape).copy()
        x[..., self.missing_index] = guesses
        return x


@dataclass(frozen=True)
class ImputedRecord:
    values: np.ndarray
    objective_value: float
    generations_used: int


def batch_objective(problem: ImputationProblem, guesses) -> np.ndarray:
    x = problem.assemble(np.atleast_2d(guesses))
    r = x - forward(problem.model, x)
    return np.sum(r * r, axis=1)


def objective(problem: ImputationProblem, guess) -> float:
    return float(batch_objective(problem, np.asarray(guess, dtype=np.float64)[None, :])[0])


def impute_record(problem: ImputationProblem, ga_config: ga.GaConfig) -> ImputedRecord:
    k = problem.missing_index.size
    result = ga.run(
        lambda pop: batch_objective(problem, pop),
        ga_config,
        n_genes=k,
        vectorized=True,
    )
    values = problem.assemble(result.best_chromosome)
    values[problem.known_mask] = problem.record[problem.known_mask]
    return ImputedRecord(values, float(result.best_fitness), result.generations)


def impute_dataset(ds: Dataset, model, ga_config: ga.GaConfig):
    """Impute every incomplete row independently.

    Row ``i`` uses GA seed ``ga_config.seed ^ i`` so results do not depend on
    which other rows are present or on processing order.
    """
    if model.n_inputs != ds.n_cols:
        raise SchemaMismatch(f"model takes {model.n_inputs} inputs, dataset has {ds.n_cols} columns")
    values = ds.values.copy()
    records = []
    for i in np.flatnonzero(~ds.complete_rows):
        problem = ImputationProblem(np.where(ds.mask[i], ds.values[i], 0.0), ds.mask[i], model)
        rec = impute_record(problem, replace(ga_config, seed=int(ga_config.seed) ^ int(i)))
        values[i] = rec.values
        records.append(rec)
    return ds.replace(values=values, mask=np.ones_like(ds.mask)), records
