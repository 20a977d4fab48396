"""Real-coded genetic algorithm (minimisation) over a box.

Binary tournaments pick parents, arithmetic crossover recombines them, and
Gaussian mutation clipped to the bounds perturbs the children. The best
``elitism_count`` individuals survive unchanged, so the best-so-far fitness
never increases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyPopulation, InvalidConfig, NonFiniteObjective

MUTATION_SCALE = 0.1  # sigma as a fraction of each gene's range


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    generations: int = 30
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    elitism_count: int = 1
    bounds: tuple | None = None  # ((lo, hi), ...); None means [0, 1] per gene
    seed: int = 0

    def validate(self) -> None:
        if self.population_size < 2:
            raise InvalidConfig("population_size must be at least 2")
        if self.generations < 0:
            raise InvalidConfig("generations must be non-negative")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise InvalidConfig("mutation_rate must lie in [0, 1]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise InvalidConfig("crossover_rate must lie in [0, 1]")
        if not 0 <= self.elitism_count < self.population_size:
            raise InvalidConfig("elitism_count must be below population_size")
        if self.bounds is not None:
            for lo, hi in self.bounds:
                if not lo <= hi:
                    raise InvalidConfig(f"bad bounds ({lo}, {hi})")

    def bounds_array(self, n_genes: int | None = None) -> np.ndarray:
        if self.bounds is None:
            if n_genes is None:
                raise InvalidConfig("bounds are required when the gene count is unknown")
            return np.tile([0.0, 1.0], (n_genes, 1))
        b = np.asarray(self.bounds, dtype=np.float64).reshape(-1, 2)
        if n_genes is not None and b.shape[0] != n_genes:
            if b.shape[0] != 1:
                raise DimensionMismatch(f"{b.shape[0]} bounds for {n_genes} genes")
            b = np.tile(b, (n_genes, 1))
        return b


@dataclass
class GaResult:
    best_chromosome: np.ndarray
    best_fitness: float
    history: np.ndarray  # best-so-far after initialisation and after each generation
    evaluations: int = 0
    generations: int = 0


def select(population, fitnesses, rng) -> int:
    """Index of the fitter of two individuals drawn with replacement."""
    n = len(fitnesses)
    if n == 0 or len(population) == 0:
        raise EmptyPopulation("cannot select from an empty population")
    i, j = rng.integers(n, size=2)
    return int(j) if fitnesses[j] < fitnesses[i] else int(i)


def crossover(a, b, rng, crossover_rate: float = 0.9):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"parents differ in length: {a.shape} vs {b.shape}")
    if rng.random() >= crossover_rate:
        return a.copy(), b.copy()
    lam = rng.random()
    # written as offsets so that a == b reproduces the parent exactly
    return b + lam * (a - b), a + lam * (b - a)


def mutate(c, rng, config: GaConfig, bounds=None):
    c = np.asarray(c, dtype=np.float64)
    if bounds is None:
        bounds = config.bounds_array(c.shape[0])
    lo, hi = bounds[:, 0], bounds[:, 1]
    hit = rng.random(c.shape[0]) < config.mutation_rate
    noise = rng.normal(0.0, 1.0, size=c.shape[0]) * (MUTATION_SCALE * (hi - lo))
    return np.where(hit, np.clip(c + noise, lo, hi), c)


def _evaluate(objective, pop, vectorized):
    if vectorized:
        fit = np.asarray(objective(pop), dtype=np.float64).reshape(pop.shape[0])
    else:
        fit = np.array([float(objective(ind)) for ind in pop])
    bad = ~np.isfinite(fit)
    if bad.any():
        raise NonFiniteObjective(pop[np.argmax(bad)].copy())
    return fit


def run(objective, config: GaConfig, n_genes: int | None = None, vectorized: bool = False) -> GaResult:
    """Minimise ``objective`` over the configured box.

    With ``vectorized=True`` the objective receives the whole population as a
    ``(population_size, n_genes)`` array and returns one fitness per row; RNG
    consumption is the same either way, so both modes give identical results.
    """
    config.validate()
    bounds = config.bounds_array(n_genes)
    lo, hi = bounds[:, 0], bounds[:, 1]
    n = bounds.shape[0]
    size = config.population_size
    rng = np.random.default_rng(config.seed)

    pop = lo + rng.random((size, n)) * (hi - lo)
    fit = _evaluate(objective, pop, vectorized)
    evaluations = size
    best = int(np.argmin(fit))
    best_x, best_f = pop[best].copy(), float(fit[best])
    history = [best_f]

    n_elite = config.elitism_count
    n_children = size - n_elite
    n_pairs = (n_children + 1) // 2
    sigma = MUTATION_SCALE * (hi - lo)
    for _ in range(config.generations):
        order = np.argsort(fit, kind="stable")
        # one generation of select/crossover/mutate, vectorised over pairs
        draws = rng.integers(size, size=(2, n_pairs, 2))
        first, second = draws[..., 0], draws[..., 1]
        parents = np.where(fit[second] < fit[first], second, first)
        a, b = pop[parents[0]], pop[parents[1]]
        cross = (rng.random(n_pairs) < config.crossover_rate)[:, None]
        lam = rng.random(n_pairs)[:, None]
        c1 = np.where(cross, b + lam * (a - b), a)
        c2 = np.where(cross, a + lam * (b - a), b)
        children = np.stack([c1, c2], axis=1).reshape(-1, n)
        hit = rng.random(children.shape) < config.mutation_rate
        noise = rng.normal(0.0, 1.0, size=children.shape) * sigma
        children = np.where(hit, children + noise, children)
        children = np.clip(children, lo, hi)[:n_children]

        child_fit = _evaluate(objective, children, vectorized)
        evaluations += n_children
        elite = order[:n_elite]
        pop = np.vstack([pop[elite], children])
        fit = np.concatenate([fit[elite], child_fit])
        i = int(np.argmin(fit))
        if fit[i] < best_f:
            best_x, best_f = pop[i].copy(), float(fit[i])
        history.append(best_f)

    return GaResult(best_x, best_f, np.array(history), evaluations, config.generations)
