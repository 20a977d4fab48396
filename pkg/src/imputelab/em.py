"""EM for a single multivariate Gaussian on incomplete data.

Missing cells are filled with conditional means under the fitted model. A
working covariance that fails the Cholesky pivot test is reported as
``NotPositiveDefinite`` instead of being silently repaired; this is the
failure collinear data produces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .data import Dataset
from .errors import AllMissingColumn, DimensionMismatch, NotPositiveDefinite, NotSymmetric

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class EmConfig:
    max_iterations: int = 500
    tolerance: float = 1e-6
    ridge: float = 0.0
    pd_epsilon: float = 1e-10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")
        if not self.pd_epsilon > 0:
            raise ValueError("pd_epsilon must be positive")


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    covariance: np.ndarray
    log_likelihood: float = float("nan")
    iterations: int = 0
    converged: bool = False
    history: tuple = field(default=(), compare=False)  # log-likelihood per iterate

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        cov = np.array(self.covariance, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"covariance {cov.shape} for mean of length {mean.size}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def __eq__(self, other):
        if not isinstance(other, GaussianModel):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.covariance, other.covariance)
            and (self.log_likelihood == other.log_likelihood
                 or (math.isnan(self.log_likelihood) and math.isnan(other.log_likelihood)))
            and self.iterations == other.iterations
            and self.converged == other.converged
        )

    __hash__ = None


# --------------------------------------------------------------------------
# positive definiteness


def cholesky_pivots(m, pd_epsilon: float = 1e-10):
    """Lower Cholesky factor, stopping at the first pivot below ``pd_epsilon``.

    Pivots are the diagonal entries before the square root. Returns
    ``(L, None, None)`` on success or ``(None, index, pivot)`` on failure.
    """
    a = np.asarray(m, dtype=np.float64)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        piv = a[j, j] - L[j, :j] @ L[j, :j]
        if not piv >= pd_epsilon:  # also catches NaN
            return None, j, float(piv)
        L[j, j] = math.sqrt(piv)
        L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L, None, None


def _check_symmetric(m, atol=1e-8):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSymmetric(f"matrix of shape {m.shape} is not square")
    if np.any(np.abs(m - m.T) > atol):
        raise NotSymmetric("matrix is not symmetric")
    return m


def check_positive_definite(m, pd_epsilon: float = 1e-10) -> bool:
    m = _check_symmetric(m)
    L, _, _ = cholesky_pivots(m, pd_epsilon)
    return L is not None


def _null_columns(m) -> tuple:
    with np.errstate(all="ignore"):
        if not np.isfinite(m).all():
            return ()
        w, v = np.linalg.eigh(0.5 * (m + m.T))
    vec = v[:, 0]
    return tuple(int(i) for i in np.flatnonzero(np.abs(vec) > 0.1))


def _require_pd(m, pd_epsilon, what="covariance"):
    L, idx, piv = cholesky_pivots(m, pd_epsilon)
    if L is None:
        raise NotPositiveDefinite(
            f"{what} is not positive definite: Cholesky pivot {idx} is {piv:.3g} (< {pd_epsilon:g})",
            _null_columns(m),
        )
    return L


# --------------------------------------------------------------------------
# likelihood and conditional means


def _patterns(mask):
    patterns, inverse = np.unique(mask, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    for k, pattern in enumerate(patterns):
        yield pattern, np.flatnonzero(inverse == k)


def _check_dims(ds, model):
    if ds.n_cols != model.dim:
        raise DimensionMismatch(f"dataset has {ds.n_cols} columns, model has dimension {model.dim}")


def _loglik(values, mask, mean, cov, pd_epsilon):
    total = 0.0
    for pattern, rows in _patterns(mask):
        o = np.flatnonzero(pattern)
        if o.size == 0:
            continue
        L = _require_pd(cov[np.ix_(o, o)], pd_epsilon)
        z = solve_triangular(L, (values[np.ix_(rows, o)] - mean[o]).T, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        total += -0.5 * (rows.size * (o.size * LOG_2PI + logdet) + np.sum(z * z))
    return float(total)


def log_likelihood(ds: Dataset, model: GaussianModel, pd_epsilon: float = 1e-10) -> float:
    """Observed-data log-likelihood: each row scored on its observed sub-vector."""
    _check_dims(ds, model)
    _require_pd(model.covariance, pd_epsilon)
    return _loglik(ds.values, ds.mask, model.mean, model.covariance, pd_epsilon)


def _conditional(values, pattern, rows, mean, cov, pd_epsilon):
    """Conditional means of the missing block and the conditional covariance."""
    o = np.flatnonzero(pattern)
    u = np.flatnonzero(~pattern)
    if o.size == 0:
        return u, np.tile(mean[u], (rows.size, 1)), cov[np.ix_(u, u)]
    L = _require_pd(cov[np.ix_(o, o)], pd_epsilon)
    s_ou = cov[np.ix_(o, u)]
    # B = Soo^{-1} Sou
    B = solve_triangular(L.T, solve_triangular(L, s_ou, lower=True), lower=False)
    xhat = mean[u] + (values[np.ix_(rows, o)] - mean[o]) @ B
    cond_cov = cov[np.ix_(u, u)] - s_ou.T @ B
    return u, xhat, cond_cov


def em_step(values, mask, mean, cov, ridge=0.0, pd_epsilon=1e-10):
    """One E-step plus M-step. Returns the updated (mean, covariance)."""
    n, d = values.shape
    filled = np.where(mask, values, 0.0)
    correction = np.zeros((d, d))
    for pattern, rows in _patterns(mask):
        if pattern.all():
            continue
        u, xhat, cond_cov = _conditional(values, pattern, rows, mean, cov, pd_epsilon)
        filled[np.ix_(rows, u)] = xhat
        correction[np.ix_(u, u)] += rows.size * cond_cov
    new_mean = filled.mean(axis=0)
    centred = filled - new_mean
    new_cov = (centred.T @ centred + correction) / n
    new_cov = 0.5 * (new_cov + new_cov.T)
    if ridge:
        new_cov = new_cov + ridge * np.eye(d)
    return new_mean, new_cov


def initial_moments(ds: Dataset, ridge: float = 0.0, pd_epsilon: float = 1e-10):
    """Observed column means and the pairwise-available covariance.

    Falls back to the diagonal when the pairwise matrix is not positive
    definite.
    """
    for j in range(ds.n_cols):
        if not ds.mask[:, j].any():
            raise AllMissingColumn(j)
    m = ds.mask.astype(np.float64)
    mean = np.array([ds.observed(j).mean() for j in range(ds.n_cols)])
    centred = np.where(ds.mask, ds.values - mean, 0.0)
    counts = m.T @ m
    with np.errstate(invalid="ignore", divide="ignore"):
        cov = np.where(counts > 0, (centred.T @ centred) / counts, 0.0)
    cov = 0.5 * (cov + cov.T) + ridge * np.eye(ds.n_cols)
    if cholesky_pivots(cov, pd_epsilon)[0] is None:
        cov = np.diag(np.diag(cov))
    return mean, cov


def em_fit(ds: Dataset, config: EmConfig = EmConfig()) -> GaussianModel:
    if ds.n_rows <= ds.n_cols:
        warnings.warn(
            f"{ds.n_rows} rows for {ds.n_cols} columns; the covariance is poorly determined",
            stacklevel=2,
        )
    values, mask = ds.values, ds.mask
    mean, cov = initial_moments(ds, config.ridge, config.pd_epsilon)
    _require_pd(cov, config.pd_epsilon, "initial covariance")
    ll = _loglik(values, mask, mean, cov, config.pd_epsilon)
    history = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        mean, cov = em_step(values, mask, mean, cov, config.ridge, config.pd_epsilon)
        _require_pd(cov, config.pd_epsilon, f"covariance after EM iteration {iterations}")
        new_ll = _loglik(values, mask, mean, cov, config.pd_epsilon)
        history.append(new_ll)
        delta = abs(new_ll - ll)
        ll = new_ll
        if delta < config.tolerance:
            converged = True
            break
    return GaussianModel(mean, cov, ll, iterations, converged, tuple(history))


def em_impute(ds: Dataset, model: GaussianModel, pd_epsilon: float = 1e-10) -> Dataset:
    """Replace every missing cell by its conditional mean given the row's observed cells."""
    _check_dims(ds, model)
    _require_pd(model.covariance, pd_epsilon)
    values = ds.values.copy()
    for pattern, rows in _patterns(ds.mask):
        if pattern.all():
            continue
        u, xhat, _ = _conditional(ds.values, pattern, rows, model.mean, model.covariance, pd_epsilon)
        values[np.ix_(rows, u)] = xhat
    return ds.replace(values=values, mask=np.ones_like(ds.mask))


# --------------------------------------------------------------------------
# text serialization


def to_text(model: GaussianModel) -> str:
    lines = [
        "imputelab-gaussian 1",
        f"dim {model.dim}",
        f"iterations {model.iterations}",
        f"converged {int(model.converged)}",
        f"log_likelihood {model.log_likelihood!r}",
        "mean",
        " ".join(repr(float(v)) for v in model.mean),
        "covariance",
    ]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in model.covariance)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> GaussianModel:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines or lines[0] != "imputelab-gaussian 1":
        raise ValueError("not an imputelab Gaussian model file")
    header = dict(ln.split(None, 1) for ln in lines[1:5])
    d = int(header["dim"])
    if lines[5] != "mean" or lines[7] != "covariance":
        raise ValueError("malformed Gaussian model file")
    mean = [float(v) for v in lines[6].split()] if d else []
    cov = [[float(v) for v in ln.split()] for ln in lines[8 : 8 + d]]
    return GaussianModel(
        np.array(mean),
        np.array(cov).reshape(d, d),
        float(header["log_likelihood"]),
        int(header["iterations"]),
        header["converged"] == "1",
    )
