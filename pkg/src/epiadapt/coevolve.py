"""Cooperative coevolution for constrained large-scale search.

Each cycle draws a fresh random partition of the decision indices into
equal-size subcomponents and optimizes them one by one in the context of
the global best vector: a subcomponent member is scored by splicing its
genes into the best candidate at the group's indices. The feasibility
tolerance decays on a single global generation counter across all
subcomponents and cycles.

All randomness is drawn from streams keyed by (seed, purpose, index), so
results are reproducible and independent of evaluation scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .de_core import Candidate, DEConfig, Population, init_population, nsde_generation
from .eps_constraint import EpsilonSchedule, epsilon_at

_INIT, _GROUPING, _GENERATION = 0, 1, 2


def _keyed_rng(seed: int, kind: int, index: int = 0) -> np.random.Generator:
    # Fixed-length entropy tuples keep the streams collision-free.
    return np.random.default_rng([seed, kind, index, 0])


@dataclass(frozen=True)
class GroupingPlan:
    """A permutation of [0, D) split into ns consecutive groups of size ds."""

    perm: np.ndarray = field(repr=False)
    ns: int
    ds: int

    def __post_init__(self) -> None:
        perm = np.asarray(self.perm, dtype=int)
        if self.ns * self.ds != perm.size:
            raise ValueError("ns * ds must equal the permutation length")
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("perm must be a permutation of [0, D)")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    def indices_for(self, group: int) -> np.ndarray:
        """Decision indices owned by 1-based group j."""
        if not 1 <= group <= self.ns:
            raise ValueError(f"group {group} outside [1, {self.ns}]")
        return self.perm[(group - 1) * self.ds : group * self.ds]


@dataclass(frozen=True)
class C3Config:
    """Decomposition size and budget layout of the coevolution run.

    ``sub_fes`` is the evaluation budget of one subcomponent visit (the
    context-evaluation pass included), defaulting to 10 * NP; ``cycles``
    of None runs until the total budget is exhausted. ``count_reevals``
    controls whether the full-population re-evaluation after each visit is
    charged against the budget (it always happens).
    """

    ds: int
    total_budget: int
    sub_fes: int | None = None
    cycles: int | None = None
    gc_fraction: float = 0.2
    lam: float = 10.0
    count_reevals: bool = True

    def __post_init__(self) -> None:
        if self.ds < 1:
            raise ValueError("ds must be positive")
        if self.total_budget < 1:
            raise ValueError("total_budget must be positive")
        if self.cycles is not None and self.cycles < 1:
            raise ValueError("cycles must be positive when given")
        if not 0.0 < self.gc_fraction < 1.0:
            raise ValueError("gc_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class GenerationRecord:
    """One history row: population best after a completed generation."""

    generation: int
    cycle: int
    group: int
    best_f: float
    best_violation: float
    epsilon: float


@dataclass(frozen=True)
class OptimizationResult:
    best: Candidate
    history: list[GenerationRecord]
    evaluations: int
    generations: int
    eps_schedule: EpsilonSchedule


@dataclass(frozen=True)
class SubcomponentOutcome:
    evaluations: int
    generations: int
    history: list[GenerationRecord]


def random_grouping(dim: int, ns: int, rng: np.random.Generator) -> GroupingPlan:
    """Uniform random partition of [0, dim) into ns groups of dim/ns indices."""
    if ns < 1:
        raise ValueError("ns must be positive")
    if dim % ns != 0:
        raise ValueError(f"ns={ns} does not divide dim={dim}")
    return GroupingPlan(perm=rng.permutation(dim), ns=ns, ds=dim // ns)


def grouping_probability(k: int, cycles: int, ns: int) -> float:
    """Probability that a fixed index pair shares a group in >= k of K cycles.

    Binomial tail with per-cycle probability 1/ns, accumulated through
    log-domain binomial coefficients for numerical stability.
    """
    if not 1 <= k <= cycles:
        raise ValueError(f"need 1 <= k <= cycles, got k={k}, cycles={cycles}")
    if ns < 1:
        raise ValueError("ns must be positive")
    if ns == 1:
        return 1.0
    p = 1.0 / ns
    log_terms = []
    for l in range(k, cycles + 1):
        log_c = (
            math.lgamma(cycles + 1) - math.lgamma(l + 1) - math.lgamma(cycles - l + 1)
        )
        log_terms.append(log_c + l * math.log(p) + (cycles - l) * math.log1p(-p))
    top = max(log_terms)
    return float(math.exp(top) * sum(math.exp(lt - top) for lt in log_terms))


def optimize_subcomponent(
    pop: Population,
    plan: GroupingPlan,
    group: int,
    best_genes: np.ndarray,
    evaluate,
    sched: EpsilonSchedule,
    de_cfg: DEConfig,
    sub_fes: int,
    seed: int,
    gen_start: int = 0,
    cycle: int = 1,
    max_fes: int | None = None,
    count_reevals: bool = True,
) -> SubcomponentOutcome:
    """Optimize one group's columns in the context of the global best.

    Extracts the group's columns, scores every member spliced into
    ``best_genes`` (one population's worth of evaluations), then runs
    generations until ``sub_fes`` evaluations are consumed, writes the
    evolved columns back, and re-evaluates the full population so the
    caches match the genes again. Returns the evaluations charged (the
    re-evaluation pass is charged only when ``count_reevals``), the
    generations run, and their history rows.
    """
    np_size = pop.size
    if sub_fes < 2 * np_size:
        raise ValueError(
            f"sub_fes={sub_fes} cannot fund the context pass plus one generation"
        )
    idx = plan.indices_for(group)
    reeval_cost = np_size if count_reevals else 0

    def splice(sub_genes: np.ndarray) -> np.ndarray:
        full = np.tile(best_genes, (sub_genes.shape[0], 1))
        full[:, idx] = sub_genes
        return full

    def sub_evaluate(sub_genes: np.ndarray):
        return evaluate(splice(sub_genes))

    sub_f, sub_viol = sub_evaluate(pop.genes[:, idx])
    sub = Population(
        genes=pop.genes[:, idx].copy(),
        f=np.asarray(sub_f, dtype=float),
        violation=np.asarray(sub_viol, dtype=float),
    )
    used = np_size
    gens = 0
    history: list[GenerationRecord] = []
    while used + np_size <= sub_fes and (
        max_fes is None or used + np_size + reeval_cost <= max_fes
    ):
        generation = gen_start + gens
        eps = epsilon_at(sched, min(generation, sched.gmax))
        used += nsde_generation(
            sub, sub_evaluate, eps, de_cfg, _keyed_rng(seed, _GENERATION, generation)
        )
        gens += 1
        b = sub.eps_best_index(eps)
        history.append(
            GenerationRecord(
                generation=generation + 1,
                cycle=cycle,
                group=group,
                best_f=float(sub.f[b]),
                best_violation=float(sub.violation[b]),
                epsilon=eps,
            )
        )
    pop.genes[:, idx] = sub.genes
    full_f, full_viol = evaluate(pop.genes)
    pop.f = np.asarray(full_f, dtype=float)
    pop.violation = np.asarray(full_viol, dtype=float)
    used += reeval_cost
    return SubcomponentOutcome(evaluations=used, generations=gens, history=history)


def _make_schedule(
    eps0: float, total_budget: int, np_size: int, gc_fraction: float, lam: float
) -> EpsilonSchedule:
    gmax = max(2, total_budget // np_size)
    gc = min(max(1, int(gc_fraction * gmax)), gmax - 1)
    return EpsilonSchedule(eps0=eps0, gc=gc, gmax=gmax, lam=lam)


def run_c3(
    evaluate,
    dim: int,
    c3_cfg: C3Config,
    de_cfg: DEConfig,
    seed: int,
) -> OptimizationResult:
    """Full coevolution loop: cycles of regrouping and subcomponent visits.

    Halts when the configured cycles are exhausted or the next visit would
    overrun the total budget. Returns the feasibility-first best of the
    final population together with the per-generation history.
    """
    np_size = de_cfg.np_size
    if dim % c3_cfg.ds != 0:
        raise ValueError(f"ds={c3_cfg.ds} does not divide dim={dim}")
    ns = dim // c3_cfg.ds
    sub_fes = c3_cfg.sub_fes if c3_cfg.sub_fes is not None else 10 * np_size
    if sub_fes < 2 * np_size:
        raise ValueError(f"sub_fes={sub_fes} must be at least 2*NP={2 * np_size}")
    reeval_cost = np_size if c3_cfg.count_reevals else 0
    visit_min = 2 * np_size + reeval_cost
    if c3_cfg.total_budget < np_size + visit_min:
        raise ValueError(
            f"total_budget={c3_cfg.total_budget} cannot fund the initial "
            f"population plus one subcomponent visit ({np_size + visit_min})"
        )

    genes = init_population(de_cfg, dim, _keyed_rng(seed, _INIT))
    f, viol = evaluate(genes)
    pop = Population(genes, np.asarray(f, dtype=float), np.asarray(viol, dtype=float))
    fes = np_size
    sched = _make_schedule(
        float(pop.violation.max()), c3_cfg.total_budget, np_size,
        c3_cfg.gc_fraction, c3_cfg.lam,
    )
    gen = 0
    history: list[GenerationRecord] = []
    best_genes = pop.genes[pop.eps_best_index(epsilon_at(sched, 0))].copy()

    cycle = 0
    exhausted = False
    while not exhausted and (c3_cfg.cycles is None or cycle < c3_cfg.cycles):
        if fes + visit_min > c3_cfg.total_budget:
            break
        cycle += 1
        if ns == 1:
            # A single group owns every index; the permutation is vacuous.
            plan = GroupingPlan(perm=np.arange(dim), ns=1, ds=dim)
        else:
            plan = random_grouping(dim, ns, _keyed_rng(seed, _GROUPING, cycle))
        for group in range(1, ns + 1):
            if fes + visit_min > c3_cfg.total_budget:
                exhausted = True
                break
            out = optimize_subcomponent(
                pop, plan, group, best_genes, evaluate, sched, de_cfg, sub_fes,
                seed, gen_start=gen, cycle=cycle,
                max_fes=c3_cfg.total_budget - fes,
                count_reevals=c3_cfg.count_reevals,
            )
            fes += out.evaluations
            gen += out.generations
            history.extend(out.history)
            eps = epsilon_at(sched, min(gen, sched.gmax))
            best_genes = pop.genes[pop.eps_best_index(eps)].copy()

    final = pop.eps_best_index(0.0)
    return OptimizationResult(
        best=pop.candidate(final),
        history=history,
        evaluations=fes,
        generations=gen,
        eps_schedule=sched,
    )


def run_nsde(
    evaluate,
    dim: int,
    total_budget: int,
    de_cfg: DEConfig,
    seed: int,
    gc_fraction: float = 0.2,
    lam: float = 10.0,
) -> OptimizationResult:
    """Plain full-dimensional NSDE under the same epsilon schedule.

    Uses the same keyed generation streams as :func:`run_c3`, so a
    single-group coevolution run with re-evaluations uncharged reproduces
    this trajectory generation for generation.
    """
    np_size = de_cfg.np_size
    if total_budget < 2 * np_size:
        raise ValueError(f"total_budget={total_budget} cannot fund one generation")
    genes = init_population(de_cfg, dim, _keyed_rng(seed, _INIT))
    f, viol = evaluate(genes)
    pop = Population(genes, np.asarray(f, dtype=float), np.asarray(viol, dtype=float))
    fes = np_size
    sched = _make_schedule(
        float(pop.violation.max()), total_budget, np_size, gc_fraction, lam
    )
    gen = 0
    history: list[GenerationRecord] = []
    while fes + np_size <= total_budget:
        eps = epsilon_at(sched, min(gen, sched.gmax))
        fes += nsde_generation(
            pop, evaluate, eps, de_cfg, _keyed_rng(seed, _GENERATION, gen)
        )
        gen += 1
        b = pop.eps_best_index(eps)
        history.append(
            GenerationRecord(
                generation=gen,
                cycle=0,
                group=0,
                best_f=float(pop.f[b]),
                best_violation=float(pop.violation[b]),
                epsilon=eps,
            )
        )
    final = pop.eps_best_index(0.0)
    return OptimizationResult(
        best=pop.candidate(final),
        history=history,
        evaluations=fes,
        generations=gen,
        eps_schedule=sched,
    )
