from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imputelab import ga, mlp, nnga
from imputelab.bench import train_autoencoder
from imputelab.config import default_mlp
from imputelab.data import Dataset, MissingnessSpec, SplitSpec, gen_synthetic, inject_missing, split
from imputelab.errors import SchemaMismatch
from imputelab.metrics import correlation


def identity_model(d):
    cfg = mlp.MlpConfig(d, d, "linear", "linear")
    return mlp.MlpModel(np.eye(d), np.zeros(d), np.eye(d), np.zeros(d), cfg)


def constant_model(c):
    d = len(c)
    cfg = mlp.MlpConfig(d, 2, "tanh", "linear")
    return mlp.MlpModel(np.zeros((2, d)), np.zeros(2), np.zeros((d, 2)), np.asarray(c), cfg)


def problem(record, known, model):
    return nnga.ImputationProblem(np.asarray(record, float), np.asarray(known, bool), model)


def test_identity_model_objective_vanishes():
    p = problem([0.1, 0.0, 0.7], [True, False, True], identity_model(3))
    for g in np.random.default_rng(0).random((10, 1)):
        assert nnga.objective(p, g) == pytest.approx(0.0, abs=1e-30)
    rec = nnga.impute_record(p, ga.GaConfig(seed=1))
    assert rec.objective_value < 1e-12
    assert rec.values[0] == 0.1 and rec.values[2] == 0.7


def test_constant_model_objective_closed_form():
    c = np.array([0.3, 0.7, 0.2])
    p = problem([0.5, 0.0, 0.1], [True, False, True], constant_model(c))
    g = np.array([0.4])
    full = np.array([0.5, 0.4, 0.1])
    assert nnga.objective(p, g) == pytest.approx(float(np.sum((full - c) ** 2)), abs=1e-15)
    rec = nnga.impute_record(p, ga.GaConfig(seed=0))
    assert abs(rec.values[1] - 0.7) < 0.05


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_objective_nonnegative(seed):
    rng = np.random.default_rng(seed)
    m = mlp.init(mlp.autoencoder_config(5, seed=seed))
    known = rng.random(5) < 0.5
    known[0], known[1] = True, False
    p = problem(rng.random(5), known, m)
    guesses = rng.random((8, int((~known).sum())))
    vals = nnga.batch_objective(p, guesses)
    assert np.all(vals >= 0)
    assert vals[3] == pytest.approx(nnga.objective(p, guesses[3]), rel=1e-14)


def test_problem_preconditions():
    m = identity_model(3)
    with pytest.raises(ValueError):
        problem([0.1, 0.2, 0.3], [True] * 3, m)
    with pytest.raises(ValueError):
        problem([0.1, 0.2, 0.3], [False] * 3, m)
    with pytest.raises(ValueError):
        problem([0.1, 0.2], [True, False], m)


def _random_search_cases(ga_config):
    X = gen_synthetic("nonlinear", 300, seed=0).values
    model, _ = mlp.train(mlp.init(mlp.autoencoder_config(5, optimizer="lbfgs", epochs=100)), X)
    rng = np.random.default_rng(0)
    for k in range(20):
        known = np.ones(5, bool)
        known[rng.choice(5, size=rng.integers(1, 4), replace=False)] = False
        p = problem(X[k], known, model)
        rec = nnga.impute_record(p, replace(ga_config, seed=k))
        naive = nnga.batch_objective(p, rng.random((100, int((~known).sum()))))
        assert np.array_equal(rec.values[known], X[k][known])
        yield rec.objective_value, naive.min()


@pytest.mark.xfail(strict=True, reason="pop 20 x 30 generations stalls on flat valleys when "
                   "3 of 5 values are missing; 1 of these 20 problems loses to random search")
def test_default_ga_beats_random_guessing():
    for got, naive in _random_search_cases(ga.GaConfig()):
        assert got <= naive


def test_larger_ga_beats_random_guessing():
    for got, naive in _random_search_cases(ga.GaConfig(population_size=50, generations=100)):
        assert got <= naive


def test_impute_dataset_identity_cases():
    m = identity_model(3)
    full = Dataset.from_array(np.random.default_rng(0).random((4, 3)))
    out, recs = nnga.impute_dataset(full, m, ga.GaConfig())
    assert recs == [] and np.array_equal(out.values, full.values)
    with pytest.raises(SchemaMismatch):
        nnga.impute_dataset(Dataset.from_array(np.zeros((2, 2))), m, ga.GaConfig())


def test_identical_rows_identical_imputations():
    m = mlp.init(mlp.autoencoder_config(3, seed=4))
    ds = Dataset.from_array([[0.2, np.nan, 0.6], [0.2, np.nan, 0.6]])
    out, recs = nnga.impute_dataset(ds, m, ga.GaConfig(seed=6))
    assert len(recs) == 2
    # per-record seeds differ (seed ^ row), so compare each row with a rerun instead
    again, _ = nnga.impute_dataset(ds, m, ga.GaConfig(seed=6))
    assert np.array_equal(out.values, again.values)
    single = nnga.impute_record(problem([0.2, 0.0, 0.6], [True, False, True], m),
                                ga.GaConfig(seed=6 ^ 1))
    assert out.values[1, 1] == single.values[1]


def test_28_row_test_split_and_known_preservation():
    ds = gen_synthetic("nonlinear", 200, seed=0)
    train, test = split(ds, SplitSpec())
    bad, _ = inject_missing(test, MissingnessSpec([2], 1.0, seed=1))
    model, _ = mlp.train(mlp.init(mlp.autoencoder_config(5, epochs=20)), train.values)
    out, recs = nnga.impute_dataset(bad, model, ga.GaConfig())
    assert len(recs) == 28
    keep = bad.mask
    assert np.array_equal(out.values[keep], bad.values[keep])
    assert out.mask.all()


@pytest.mark.slow
def test_end_to_end_nonlinear_column():
    ds = gen_synthetic("nonlinear", 2000, seed=0)
    train, test = split(ds, SplitSpec())
    bad, truth = inject_missing(test, MissingnessSpec([2], 1.0, seed=0))
    model = train_autoencoder(train, replace(default_mlp(), seed=0), restarts=4)
    out, _ = nnga.impute_dataset(bad, model, ga.GaConfig(seed=0))
    r = correlation([t[2] for t in truth], [out.values[i, j] for i, j, _ in truth])
    assert r >= 0.8
