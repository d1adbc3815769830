"""Differential-evolution population machinery with neighborhood-search F.

The scale factor is drawn per individual per generation from a mixture of a
Gaussian centered at 0.5 and a heavy-tailed standard Cauchy; trials are
accepted under the epsilon comparator. Heavy-tailed draws are used as-is
(bound repair clamps the genes), which is what gives the operator its
escape behavior.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eps_constraint import better_than


@dataclass(frozen=True)
class DEConfig:
    """Population size, crossover rate, mixture probability, and gene bounds."""

    np_size: int
    cr: float = 0.9
    fp: float = 0.5
    bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        if self.np_size < 4:
            raise ValueError("population size must be at least 4")
        if not 0.0 <= self.cr <= 1.0:
            raise ValueError("cr must lie in [0, 1]")
        if not 0.0 <= self.fp <= 1.0:
            raise ValueError("fp must lie in [0, 1]")
        if self.bounds[0] > self.bounds[1]:
            raise ValueError("bounds must satisfy min <= max")


@dataclass(frozen=True)
class Candidate:
    """A decision vector with its cached objective and violation."""

    genes: np.ndarray = field(repr=False)
    f: float
    violation: float


@dataclass
class Population:
    """Population arrays: genes (NP, D) with cached objectives and violations."""

    genes: np.ndarray
    f: np.ndarray
    violation: np.ndarray

    @property
    def size(self) -> int:
        return self.genes.shape[0]

    def eps_best_index(self, eps: float) -> int:
        best = 0
        for i in range(1, self.size):
            if better_than(self.f[i], self.violation[i], self.f[best], self.violation[best], eps):
                best = i
        return best

    def candidate(self, i: int) -> Candidate:
        return Candidate(self.genes[i].copy(), float(self.f[i]), float(self.violation[i]))


def init_population(cfg: DEConfig, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform-random genes of shape (NP, dim) within the configured bounds."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    lo, hi = cfg.bounds
    return lo + rng.random((cfg.np_size, dim)) * (hi - lo)


def sample_scale_factor(fp: float, rng: np.random.Generator) -> float:
    """Draw F from N(0.5, 0.5) with probability fp, else a standard Cauchy."""
    if rng.random() < fp:
        return float(rng.normal(0.5, 0.5))
    return float(rng.standard_cauchy())


def mutate_current_to_best_1(
    i: int,
    genes: np.ndarray,
    best: np.ndarray,
    f: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """current-to-best/1 mutant: x_i + F*(best - x_i) + F*(x_r1 - x_r2).

    r1 and r2 are distinct random indices, both different from i.
    """
    np_size = genes.shape[0]
    if np_size < 4:
        raise ValueError("mutation needs a population of at least 4")
    r1 = int(rng.integers(np_size))
    while r1 == i:
        r1 = int(rng.integers(np_size))
    r2 = int(rng.integers(np_size))
    while r2 == i or r2 == r1:
        r2 = int(rng.integers(np_size))
    return genes[i] + f * (best - genes[i]) + f * (genes[r1] - genes[r2])


def binomial_crossover(
    target: np.ndarray, mutant: np.ndarray, cr: float, rng: np.random.Generator
) -> np.ndarray:
    """Mix mutant genes into the target where rand <= cr, forcing one index."""
    if target.shape != mutant.shape:
        raise ValueError("target and mutant must have the same length")
    take = rng.random(target.shape[0]) <= cr
    take[rng.integers(target.shape[0])] = True
    return np.where(take, mutant, target)


def repair_bounds(v: np.ndarray, bounds: tuple[float, float]) -> np.ndarray:
    """Clamp every gene into [min, max]."""
    return np.clip(v, bounds[0], bounds[1])


def nsde_generation(
    pop: Population,
    evaluate,
    eps: float,
    cfg: DEConfig,
    rng: np.random.Generator,
) -> int:
    """Run one synchronous generation in place; returns evaluations consumed.

    Every individual gets an independent child stream spawned from ``rng``,
    so trial construction is order-independent and reproducible regardless
    of how evaluations are scheduled. All trials are built from the
    generation-start population, batch-evaluated, then selection is applied
    in index order under the epsilon comparator.
    """
    if pop.size != cfg.np_size:
        raise ValueError(f"population size {pop.size} != configured {cfg.np_size}")
    best = pop.genes[pop.eps_best_index(eps)].copy()
    trials = np.empty_like(pop.genes)
    for i, stream in enumerate(rng.spawn(pop.size)):
        f_i = sample_scale_factor(cfg.fp, stream)
        mutant = mutate_current_to_best_1(i, pop.genes, best, f_i, stream)
        trial = binomial_crossover(pop.genes[i], mutant, cfg.cr, stream)
        trials[i] = repair_bounds(trial, cfg.bounds)
    trial_f, trial_viol = evaluate(trials)
    for i in range(pop.size):
        if better_than(trial_f[i], trial_viol[i], pop.f[i], pop.violation[i], eps):
            pop.genes[i] = trials[i]
            pop.f[i] = trial_f[i]
            pop.violation[i] = trial_viol[i]
    return pop.size
