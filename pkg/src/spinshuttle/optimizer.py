"""Genetic-algorithm search over per-period resistor sequences.

Genomes are length-N_p index strings over the four hardware-realizable
ladder settings. Fitness is the final spin purity (noise-free) or its
mean minus a weighted standard deviation over a common set of noise
realizations (noise-aware). Selection is tournament, crossover uniform,
mutation per-gene resampling among the other three alleles, with one elite
carried over per generation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .pipeline import RealizationRunner, ShuttleSetup, derive_seeds, run_ensemble
from .valleymap import ValleyMap

N_ALLELES = 4


@dataclass(frozen=True)
class GAConfig:
    """Optimization hyperparameters (reference defaults for the cryo-noise
    study; tournament size and lambda_sigma are toolkit choices)."""

    generations: int = 50
    population: int = 12
    parents: int = 2
    mutation_prob: float = 0.3
    elitism: int = 1
    tournament_size: int = 3
    lambda_sigma: float = 1.0
    n_noise: int = 8
    stop_threshold: float | None = 0.9999
    seed_mode: str = "per-generation"
    warm_start: bool = True

    def __post_init__(self):
        if not self.population >= self.parents >= 2:
            raise ConfigError("need population >= parents >= 2")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ConfigError("mutation_prob must be in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ConfigError("elitism must be smaller than the population")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")
        if self.n_noise < 1:
            raise ConfigError("n_noise must be >= 1")
        if self.seed_mode not in ("per-generation", "per-run"):
            raise ConfigError("seed_mode must be 'per-generation' or 'per-run'")


@dataclass
class FitnessReport:
    """Objective value and the purity statistics behind it."""

    j: float
    purity_mean: float
    purity_std: float
    purities: np.ndarray
    n_failures: int = 0


@dataclass
class EvalContext:
    """Everything a fitness evaluation needs, plus a memo cache.

    noise_on selects the noise-aware objective J = mean - lambda_sigma * std
    over the seed set; with noise off J is the single-run final spin purity.
    """

    setup: ShuttleSetup
    vmap: ValleyMap
    noise_on: bool = False
    lambda_sigma: float = 1.0
    rtol: float | None = None
    runner: RealizationRunner | None = None
    cache: dict = field(default_factory=dict)


def evaluate(genome, ctx: EvalContext, seeds=None) -> FitnessReport:
    """Fitness of one genome under a fixed seed set (common random numbers).

    Deterministic: the same genome with the same seed set yields the same
    report, which makes the memo cache transparent.
    """
    genome = tuple(int(g) for g in genome)
    if ctx.noise_on:
        if seeds is None:
            raise ConfigError("noise-aware evaluation needs a seed set")
        seeds = [int(s) for s in seeds]
    else:
        seeds = [None]
    key = (genome, tuple(seeds))
    hit = ctx.cache.get(key)
    if hit is not None:
        return hit

    ensemble, _, failures = run_ensemble(
        ctx.setup,
        ctx.vmap,
        genome,
        seeds,
        rtol=ctx.rtol,
        runner=ctx.runner,
    )
    purities = ensemble.spin_purities()
    mean = float(purities.mean())
    std = float(purities.std())
    j = mean - ctx.lambda_sigma * std if ctx.noise_on else mean
    report = FitnessReport(
        j=j,
        purity_mean=mean,
        purity_std=std,
        purities=purities,
        n_failures=len(failures),
    )
    ctx.cache[key] = report
    return report


def _evaluate_population(genomes, ctx: EvalContext, seeds):
    """Evaluate a whole generation, fanning uncached realizations out to the
    runner in one batch so worker processes stay busy."""
    genomes = [tuple(int(g) for g in genome) for genome in genomes]
    task_seeds = [int(s) for s in seeds] if ctx.noise_on else [None]
    if ctx.runner is not None:
        pending = []
        for genome in genomes:
            if (genome, tuple(task_seeds)) not in ctx.cache:
                pending.extend((genome, s) for s in task_seeds)
        pending = list(dict.fromkeys(pending))
        if pending:
            outputs = ctx.runner.run(pending)
            by_key = dict(zip(pending, outputs))
            for genome in set(genomes):
                key = (genome, tuple(task_seeds))
                if key in ctx.cache:
                    continue
                outs = [by_key[(genome, s)] for s in task_seeds]
                finals = [o for o in outs if not isinstance(o, str)]
                if not finals:
                    continue
                purities = np.array([o.spin_purity for o in finals])
                mean = float(purities.mean())
                std = float(purities.std())
                ctx.cache[key] = FitnessReport(
                    j=mean - ctx.lambda_sigma * std if ctx.noise_on else mean,
                    purity_mean=mean,
                    purity_std=std,
                    purities=purities,
                    n_failures=len(outs) - len(finals),
                )
    return [evaluate(g, ctx, seeds) for g in genomes]


def _tournament(rng, fitness, k):
    contenders = rng.integers(0, len(fitness), size=k)
    best = contenders[0]
    for c in contenders[1:]:
        if fitness[c] > fitness[best]:
            best = c
    return int(best)


@dataclass
class GAResult:
    best_genome: tuple
    best_fitness: FitnessReport
    history: list
    generations_run: int
    evaluations: int


def run_ga(cfg: GAConfig, ctx: EvalContext, n_periods: int, master_seed: int = 0) -> GAResult:
    """Evolve resistor sequences; deterministic for a given master seed.

    Per generation: tournament-select the parents, produce the non-elite
    population by uniform crossover plus per-gene mutation, carry over the
    elites, and re-evaluate on that generation's seed set. Stops early once
    the best genome's mean purity reaches stop_threshold.
    """
    rng = np.random.default_rng(derive_seeds(master_seed, "ga-loop", 1)[0])
    seed_pool = derive_seeds(master_seed, "ga-noise", cfg.n_noise * (cfg.generations + 1))

    def seeds_for(generation: int):
        if not ctx.noise_on:
            return None
        if cfg.seed_mode == "per-run":
            return seed_pool[: cfg.n_noise]
        start = generation * cfg.n_noise
        return seed_pool[start : start + cfg.n_noise]

    population = [
        tuple(rng.integers(0, N_ALLELES, size=n_periods).tolist())
        for _ in range(cfg.population)
    ]
    if cfg.warm_start:
        population[0] = ctx.setup.baseline_genome()

    history = []
    evaluations = 0
    best_genome, best_report = None, None
    generation = 0
    while True:
        t0 = time.perf_counter()
        seeds = seeds_for(generation)
        reports = _evaluate_population(population, ctx, seeds)
        evaluations += len(reports)
        fitness = [r.j for r in reports]
        gen_best = int(np.argmax(fitness))
        if best_report is None or fitness[gen_best] >= best_report.j:
            best_genome, best_report = population[gen_best], reports[gen_best]
        history.append(
            dict(
                generation=generation,
                best_j=float(fitness[gen_best]),
                mean_j=float(np.mean(fitness)),
                best_purity_mean=float(reports[gen_best].purity_mean),
                wall_time_s=time.perf_counter() - t0,
            )
        )
        if (
            cfg.stop_threshold is not None
            and reports[gen_best].purity_mean >= cfg.stop_threshold
        ):
            break
        if generation >= cfg.generations:
            break

        order = np.argsort(fitness)[::-1]
        elites = [population[int(i)] for i in order[: cfg.elitism]]
        parents = [
            population[_tournament(rng, fitness, cfg.tournament_size)]
            for _ in range(cfg.parents)
        ]
        children = []
        while len(children) < cfg.population - cfg.elitism:
            c = len(children)
            pa = parents[c % len(parents)]
            pb = parents[(c + 1) % len(parents)]
            mask = rng.random(n_periods) < 0.5
            child = np.where(mask, pa, pb)
            mutate = rng.random(n_periods) < cfg.mutation_prob
            # resample uniformly among the other three alleles
            shift = rng.integers(1, N_ALLELES, size=n_periods)
            child = np.where(mutate, (child + shift) % N_ALLELES, child)
            children.append(tuple(int(g) for g in child))
        population = elites + children
        generation += 1

    return GAResult(
        best_genome=tuple(best_genome),
        best_fitness=best_report,
        history=history,
        generations_run=generation,
        evaluations=evaluations,
    )


def exhaustive_search(ctx: EvalContext, n_periods: int, seeds=None):
    """Brute-force optimum over all 4^n_periods genomes (oracle for tests)."""
    if n_periods > 8:
        raise ConfigError("exhaustive search is limited to n_periods <= 8")
    best_genome, best_j, table = None, -np.inf, {}
    genomes = []
    for code in range(N_ALLELES**n_periods):
        genome = tuple((code // (N_ALLELES**p)) % N_ALLELES for p in range(n_periods))
        genomes.append(genome)
    if ctx.runner is not None:
        _evaluate_population(genomes, ctx, seeds)
    for genome in genomes:
        j = evaluate(genome, ctx, seeds).j
        table[genome] = j
        if j > best_j:
            best_genome, best_j = genome, j
    return best_genome, best_j, table
