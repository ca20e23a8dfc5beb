"""Outer evolutionary loop over morphologies.

Asexual reproduction with tournament parent selection; survivor selection
is either elitist (best of parents and offspring combined) or generational
(offspring replace everything).  Each individual is evaluated once, or — when
intra-life learning is enabled — through a budgeted inner optimization of
its controller, warm-started from the evolved parameters.  Learned
parameters are never written back into genotypes (Darwinian inheritance).

Bookkeeping runs on two axes at once: generation index and cumulative
function evaluations, so runs with and without learning stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diversity import TedCache, population_diversity
from .genotype import (
    Genotype,
    MutationConfig,
    expand_phenotype,
    mutate,
    random_genotype,
)
from .learner import DEFAULT_BETA, DEFAULT_CANDIDATES, KernelConfig, optimize

SURVIVOR_MODES = ("elitist", "generational")


class IndividualEvaluationError(Exception):
    """An evaluation failed; carries the individual id for diagnosis."""

    def __init__(self, individual_id, cause):
        super().__init__(f"evaluation of individual {individual_id} failed: {cause}")
        self.individual_id = individual_id


class EvolutionAborted(Exception):
    """Run stopped early on evaluator failure; the partial log is attached."""

    def __init__(self, runlog, cause):
        super().__init__(f"run aborted: {cause}")
        self.runlog = runlog


@dataclass
class Individual:
    id: int
    genotype: Genotype
    fitness: float
    learned_params: np.ndarray | None
    evaluations_consumed: int
    birth_generation: int


@dataclass
class EvolutionConfig:
    population_size: int = 200
    offspring_count: int = 200
    tournament_size: int = 20
    survivor_mode: str = "elitist"
    learning_budget: int | None = 30    # None disables intra-life learning
    generations: int = 10
    master_seed: int = 0
    min_initial_modules: int = 15
    max_initial_modules: int = 20
    mutation: MutationConfig = field(default_factory=MutationConfig)
    evaluation_ceiling: int | None = None
    kernel: KernelConfig = field(default_factory=KernelConfig)
    n_candidates: int = DEFAULT_CANDIDATES
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.survivor_mode not in SURVIVOR_MODES:
            raise ValueError(f"survivor_mode must be one of {SURVIVOR_MODES}")
        if min(self.population_size, self.offspring_count, self.tournament_size) < 1:
            raise ValueError("all counts must be at least 1")
        if self.tournament_size > self.population_size:
            raise ValueError("tournament_size cannot exceed population_size")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.learning_budget is not None and self.learning_budget < 1:
            raise ValueError("learning_budget must be at least 1 when set")

    @property
    def evaluation_cost(self) -> int:
        """Nominal evaluations per individual (joint-less robots use fewer)."""
        return self.learning_budget if self.learning_budget is not None else 1


@dataclass
class GenerationRecord:
    generation: int
    cumulative_evaluations: int
    best_so_far: float
    best_in_population: float
    mean_fitness: float
    diversity: float


@dataclass
class RunLog:
    config: EvolutionConfig
    records: list = field(default_factory=list)       # GenerationRecord rows
    archive: list = field(default_factory=list)       # every Individual evaluated
    population: list = field(default_factory=list)    # survivors after the last row
    completed: bool = False


def tournament_select(pop, k: int, rng: np.random.Generator) -> Individual:
    """Best of k distinct uniformly drawn individuals; fitness ties go to the
    smaller id."""
    if not 1 <= k <= len(pop):
        raise ValueError("need 1 <= k <= population size")
    picks = rng.choice(len(pop), size=k, replace=False)
    return min((pop[i] for i in picks), key=lambda ind: (-ind.fitness, ind.id))


def produce_offspring(pop, n: int, rng: np.random.Generator,
                      cfg: EvolutionConfig) -> list:
    """n mutated copies of tournament-selected parents (genotypes only;
    learned parameters are not heritable)."""
    if not pop:
        raise ValueError("population is empty")
    return [mutate(tournament_select(pop, cfg.tournament_size, rng).genotype,
                   rng, cfg.mutation)
            for _ in range(n)]


def survivor_select(parents, offspring, cfg: EvolutionConfig) -> list:
    if cfg.survivor_mode == "generational":
        return list(offspring)
    merged = sorted(list(parents) + list(offspring),
                    key=lambda ind: (-ind.fitness, ind.id))
    return merged[:cfg.population_size]


def _individual_rng(master_seed: int, individual_id: int,
                    phase: int = 0) -> np.random.Generator:
    """Private evaluation stream; keyed by id so results cannot depend on
    evaluation order or parallel scheduling."""
    return np.random.default_rng(
        np.random.SeedSequence((master_seed, individual_id, phase)))


def evaluate_individual(g: Genotype, cfg: EvolutionConfig, evaluator,
                        rng: np.random.Generator, individual_id: int = 0,
                        birth_generation: int = 0) -> Individual:
    """One fitness assessment: a single trial, or a budgeted learning run
    warm-started from the genotype's own controller parameters."""
    ph = expand_phenotype(g)
    try:
        if cfg.learning_budget is None:
            fitness = float(evaluator(ph, ph.initial_params))
            return Individual(individual_id, g, fitness, None, 1, birth_generation)
        result = optimize(lambda p: evaluator(ph, p), ph.initial_params,
                          cfg.learning_budget, 2 * ph.n_param_sets, rng,
                          cfg.kernel, cfg.n_candidates, cfg.beta)
    except Exception as exc:
        raise IndividualEvaluationError(individual_id, exc) from exc
    return Individual(individual_id, g, result.best_fitness, result.best_params,
                      result.evaluations_used, birth_generation)


def cumulative_evaluations(gen: int, cfg: EvolutionConfig) -> int:
    """Closed-form running total through generation ``gen`` (exact when every
    robot has at least one joint)."""
    cost = cfg.evaluation_cost
    return cfg.population_size * cost + gen * cfg.offspring_count * cost


def evolve(cfg: EvolutionConfig, evaluator) -> RunLog:
    """Full run: random initial population, then generational cycles until
    the generation count or the optional evaluation ceiling is reached."""
    rng = np.random.default_rng(np.random.SeedSequence((cfg.master_seed,)))
    log = RunLog(config=cfg)
    ted_cache = TedCache()
    total_evals = 0
    best_so_far = -math.inf
    next_id = 0

    def assess(genotype: Genotype, generation: int) -> Individual:
        nonlocal next_id, total_evals, best_so_far
        ind = evaluate_individual(
            genotype, cfg, evaluator,
            _individual_rng(cfg.master_seed, next_id),
            individual_id=next_id, birth_generation=generation)
        next_id += 1
        total_evals += ind.evaluations_consumed
        best_so_far = max(best_so_far, ind.fitness)
        log.archive.append(ind)
        return ind

    def record(generation: int, population) -> None:
        genotypes = [ind.genotype for ind in population]
        diversity = (population_diversity(genotypes, ted_cache)
                     if len(genotypes) >= 2 else math.nan)
        fits = [ind.fitness for ind in population]
        log.records.append(GenerationRecord(
            generation, total_evals, best_so_far, max(fits),
            sum(fits) / len(fits), diversity))

    try:
        population = [
            assess(random_genotype(rng, cfg.min_initial_modules,
                                   cfg.max_initial_modules), 0)
            for _ in range(cfg.population_size)]
    except IndividualEvaluationError as exc:
        raise EvolutionAborted(log, exc) from exc
    record(0, population)

    for generation in range(1, cfg.generations + 1):
        if cfg.evaluation_ceiling is not None and total_evals >= cfg.evaluation_ceiling:
            break
        try:
            children = [assess(g, generation)
                        for g in produce_offspring(population, cfg.offspring_count,
                                                   rng, cfg)]
        except IndividualEvaluationError as exc:
            log.population = population
            raise EvolutionAborted(log, exc) from exc
        population = survivor_select(population, children, cfg)
        record(generation, population)

    log.population = population
    log.completed = True
    return log


def posthoc_learning_phase(pop, budget: int, evaluator,
                           master_seed: int = 0) -> list:
    """Extra learning pass over an existing population (warm start = each
    individual's current best parameters).  Fitness can only improve: the
    warm start re-observes the current value first."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    out = []
    for ind in pop:
        ph = expand_phenotype(ind.genotype)
        start = (np.asarray(ind.learned_params, dtype=float)
                 if ind.learned_params is not None else ph.initial_params)
        rng = _individual_rng(master_seed, ind.id, phase=1)
        try:
            result = optimize(lambda p: evaluator(ph, p), start, budget,
                              2 * ph.n_param_sets, rng)
        except Exception as exc:
            raise IndividualEvaluationError(ind.id, exc) from exc
        out.append(replace(
            ind,
            fitness=max(ind.fitness, result.best_fitness),
            learned_params=result.best_params,
            evaluations_consumed=ind.evaluations_consumed + result.evaluations_used))
    return out
