"""Generational genetic algorithm over network chromosomes.

One run works like this: an initial population of varied sizes is created
and evaluated (that is generation 0), then each later generation bumps
the epoch budget by one, shrinks the population target by a fixed
decrement (down to a floor), and refills the population by repeatedly
tournament-selecting a parent and producing one offspring from it. There
is no crossover and no elitist carry-over; the returned best is tracked
across all generations.

Every offspring slot draws from its own RNG stream derived from
(run seed, generation, slot), so results do not depend on execution
order and a parallel dispatch of slots would be bit-identical to the
serial loop used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .fitness import evaluate, worst_case_score
from .genome import (
    Chromosome,
    FitnessRecord,
    LayerBounds,
    RetryExhaustedError,
    TaskModality,
    count_parameters,
    fresh_layer,
    random_chromosome,
    sample_learning_rate,
    validate,
)
from .nn.training import NonFiniteLossError


class UncachedFitnessError(RuntimeError):
    """A pipeline stage saw a chromosome without its cached fitness."""


MUTATION_RETRY_LIMIT = 100


# ── configuration ────────────────────────────────────────────────────────────

@dataclass
class EvolutionConfig:
    """Run parameters. Defaults are the standard desk-scale settings:
    population 100 shrinking by 10 per generation to a floor of 10,
    11 generations (0..10), epochs 3 rising by 1 per generation,
    tournaments of 7, alpha 1."""

    population_size: int = 100
    generation_max: int = 10
    epochs_start: int = 3
    tournament_size: int = 7
    population_decrement: int = 10
    population_floor: int = 10
    max_size: int = 7
    alpha: float = 1.0
    seed: int = 0
    bounds: LayerBounds = field(default_factory=LayerBounds)

    def __post_init__(self):
        if self.bounds.max_size != self.max_size:
            self.bounds = replace(self.bounds, max_size=self.max_size)
        self.check()

    def check(self) -> None:
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.generation_max < 0:
            raise ValueError("generation_max must be >= 0")
        if self.epochs_start < 1:
            raise ValueError("epochs_start must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        if self.tournament_size > self.population_size:
            raise ValueError("tournament_size exceeds the initial population size")
        if self.population_floor < self.tournament_size:
            raise ValueError("population_floor must be >= tournament_size")
        if self.population_decrement < 0:
            raise ValueError("population_decrement must be >= 0")
        if self.max_size < 1:
            raise ValueError("max_size must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def epochs_at(self, generation: int) -> int:
        return self.epochs_start + generation

    def population_at(self, generation: int) -> int:
        return max(self.population_floor,
                   self.population_size - generation * self.population_decrement)


# ── per-generation statistics ────────────────────────────────────────────────

@dataclass(frozen=True)
class GenerationStats:
    generation: int
    epochs: int
    population_size: int
    fitness_mean: float
    fitness_p5: float
    fitness_p95: float
    fitness_best: float
    lr_mean: float
    lr_p5: float
    lr_p95: float
    best_val_accuracy: float
    best_n_params: int


@dataclass
class EvolutionState:
    generation: int
    epochs: int
    population: list[Chromosome]
    history: list[GenerationStats]


@dataclass(frozen=True)
class EvolutionResult:
    best: Chromosome
    history: list[GenerationStats]


Observer = Callable[[int, GenerationStats, Chromosome], None]


def summarize_generation(population: list[Chromosome],
                         generation: int = 0,
                         epochs: int = 0) -> GenerationStats:
    """Distribution summary of the cached fitness scores and learning rates.

    Percentiles are the 5th and 95th with linear interpolation; the best
    member is the one with the lowest score.
    """
    if not population:
        raise ValueError("population is empty")
    _require_cached(population)
    scores = np.array([c.fitness.score for c in population])
    rates = np.array([c.learning_rate for c in population])
    best = min(population, key=lambda c: (c.fitness.score, c.fitness.n_params))
    return GenerationStats(
        generation=generation,
        epochs=epochs,
        population_size=len(population),
        fitness_mean=float(scores.mean()),
        fitness_p5=float(np.percentile(scores, 5)),
        fitness_p95=float(np.percentile(scores, 95)),
        fitness_best=float(scores.min()),
        lr_mean=float(rates.mean()),
        lr_p5=float(np.percentile(rates, 5)),
        lr_p95=float(np.percentile(rates, 95)),
        best_val_accuracy=1.0 - best.fitness.val_error,
        best_n_params=best.fitness.n_params,
    )


def _require_cached(population) -> None:
    for c in population:
        if c.fitness is None:
            raise UncachedFitnessError(
                "chromosome reached selection without a cached fitness")


# ── rng streams ──────────────────────────────────────────────────────────────

def slot_rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    """Generator stream keyed by (run seed, generation, slot)."""
    return np.random.default_rng(np.random.SeedSequence((seed, generation, slot)))


# ── evaluation with divergence handling ──────────────────────────────────────

def evaluate_cached(chromosome: Chromosome, dataset, epochs: int,
                    config: EvolutionConfig, evaluator, rng) -> FitnessRecord:
    """Evaluate unless already cached; divergence becomes a worst-case record.

    A chromosome whose training produces a non-finite loss is kept in the
    population with the sentinel score 2*alpha + 1 so that selection can
    weed it out instead of the whole run aborting.
    """
    if chromosome.fitness is not None:
        return chromosome.fitness
    try:
        return evaluate(chromosome, dataset, epochs, config.alpha, evaluator, rng)
    except NonFiniteLossError:
        n_params = count_parameters(chromosome, dataset.modality,
                                    dataset.num_classes, config.bounds)
        record = FitnessRecord(val_error=1.0, n_params=n_params,
                               score=worst_case_score(config.alpha),
                               alpha=config.alpha, epochs_used=epochs)
        chromosome.fitness = record
        return record


# ── initial population ───────────────────────────────────────────────────────

def init_population(config: EvolutionConfig,
                    modality: TaskModality,
                    num_classes: int,
                    dataset,
                    evaluator,
                    rng: Optional[np.random.Generator] = None) -> list[Chromosome]:
    """Create and evaluate the varied-size initial population.

    Chromosome i gets interior size floor(i/10) + 1, clamped to max_size,
    so a population of 100 spans sizes 1..10 (ten of each before
    clamping). With ``rng`` omitted each slot uses its own derived stream
    keyed by (config.seed, 0, i); passing an explicit generator draws
    everything serially from it instead.
    """
    population = []
    for i in range(config.population_size):
        r = slot_rng(config.seed, 0, i) if rng is None else rng
        size = min(i // 10 + 1, config.max_size)
        chromosome = random_chromosome(size, modality, num_classes, config.bounds, r)
        try:
            evaluate_cached(chromosome, dataset, config.epochs_start, config,
                            evaluator, r)
        except Exception as exc:
            raise RuntimeError(
                f"evaluation failed for initial chromosome {i}: "
                f"{chromosome.describe()}") from exc
        population.append(chromosome)
    return population


# ── selection ────────────────────────────────────────────────────────────────

def tournament_select(population: list[Chromosome],
                      tournament_size: int,
                      rng: np.random.Generator) -> Chromosome:
    """Best (lowest score) of ``tournament_size`` uniform draws with
    replacement; ties break toward fewer parameters, then the earlier draw."""
    if not population:
        raise ValueError("population is empty")
    if tournament_size < 1:
        raise ValueError("tournament_size must be >= 1")
    _require_cached(population)
    best = None
    for _ in range(tournament_size):
        candidate = population[int(rng.integers(len(population)))]
        if best is None:
            best = candidate
            continue
        cf, bf = candidate.fitness, best.fitness
        if (cf.score, cf.n_params) < (bf.score, bf.n_params):
            best = candidate
    return best


# ── mutation ─────────────────────────────────────────────────────────────────

def mutate(parent: Chromosome,
           config: EvolutionConfig,
           modality: TaskModality,
           num_classes: int,
           rng: np.random.Generator) -> Chromosome:
    """One random edit: new learning rate, or one layer added/deleted/replaced.

    A fair coin picks the gene. Architecture edits draw uniformly among
    the feasible edit kinds: add is ruled out at max size, delete when no
    deletable layer exists (the first and terminal layers are protected).
    Invalid or no-op results are re-drawn from scratch, up to
    MUTATION_RETRY_LIMIT attempts. The parent is never modified and the
    returned chromosome carries no cached fitness.
    """
    bounds = config.bounds
    for _ in range(MUTATION_RETRY_LIMIT):
        if rng.random() < 0.5:
            new_lr = sample_learning_rate(bounds, rng)
            if new_lr == parent.learning_rate:
                continue
            return Chromosome(new_lr, parent.layers)

        interior = list(parent.layers[:-1])
        n = len(interior)
        edits = []
        if n < config.max_size:
            edits.append("add")
        if n >= 2:
            edits.append("delete")
        edits.append("replace")
        edit = edits[int(rng.integers(len(edits)))]

        if edit == "delete":
            position = 1 + int(rng.integers(n - 1))  # never the first layer
            new_interior = interior[:position] + interior[position + 1:]
        elif edit == "replace":
            position = int(rng.integers(n))
            new = fresh_layer(position, interior[:position], modality, bounds, rng)
            new_interior = interior[:position] + [new] + interior[position + 1:]
        else:
            position = int(rng.integers(n + 1))
            new = fresh_layer(position, interior[:position], modality, bounds, rng)
            new_interior = interior[:position] + [new] + interior[position:]

        child = Chromosome(parent.learning_rate,
                           tuple(new_interior) + (parent.layers[-1],))
        if child.layers == parent.layers:
            continue  # replacement landed on an identical layer; re-draw
        if validate(child, modality, num_classes, bounds).ok:
            return child
    raise RetryExhaustedError(
        f"mutation produced no valid offspring in {MUTATION_RETRY_LIMIT} attempts "
        f"for parent {parent.describe()}")


def produce_offspring(parent: Chromosome,
                      config: EvolutionConfig,
                      modality: TaskModality,
                      num_classes: int,
                      dataset,
                      evaluator,
                      epochs: int,
                      rng: np.random.Generator) -> Chromosome:
    """Mutate twice in a chain and keep the best of parent and offspring.

    offspring1 mutates the parent, offspring2 mutates offspring1; both are
    evaluated at the current epoch budget and the lowest-score chromosome
    of the three wins (ties: fewer parameters, then parent before
    offspring1 before offspring2). The parent keeps its cached record and
    is never re-trained.
    """
    if parent.fitness is None:
        raise UncachedFitnessError("produce_offspring needs an evaluated parent")
    offspring1 = mutate(parent, config, modality, num_classes, rng)
    offspring2 = mutate(offspring1, config, modality, num_classes, rng)
    evaluate_cached(offspring1, dataset, epochs, config, evaluator, rng)
    evaluate_cached(offspring2, dataset, epochs, config, evaluator, rng)

    winner = parent
    for contender in (offspring1, offspring2):
        cf, wf = contender.fitness, winner.fitness
        if (cf.score, cf.n_params) < (wf.score, wf.n_params):
            winner = contender
    return winner


# ── the run loop ─────────────────────────────────────────────────────────────

def run_evolution(config: EvolutionConfig,
                  dataset,
                  evaluator,
                  observer: Optional[Observer] = None) -> EvolutionResult:
    """Run the full generational loop and return the all-time best.

    Generation 0 is the evaluated initial population; generations
    1..generation_max each raise the epoch budget by one, shrink the
    population target, and refill it with tournament winners' offspring.
    The observer (if any) runs after every generation and its exceptions
    abort the run.
    """
    if dataset.train.features.shape[0] == 0 or dataset.validation.features.shape[0] == 0:
        raise ValueError("dataset needs non-empty train and validation partitions")
    modality = dataset.modality
    num_classes = dataset.num_classes

    population = init_population(config, modality, num_classes, dataset, evaluator)
    best = min(population, key=lambda c: (c.fitness.score, c.fitness.n_params))
    history = [summarize_generation(population, 0, config.epochs_start)]
    if observer is not None:
        observer(0, history[0], best)

    for generation in range(1, config.generation_max + 1):
        epochs = config.epochs_at(generation)
        target = config.population_at(generation)
        next_population = []
        for slot in range(target):
            rng = slot_rng(config.seed, generation, slot)
            parent = tournament_select(population, config.tournament_size, rng)
            child = produce_offspring(parent, config, modality, num_classes,
                                      dataset, evaluator, epochs, rng)
            next_population.append(child)
        population = next_population
        for c in population:
            cf, bf = c.fitness, best.fitness
            if (cf.score, cf.n_params) < (bf.score, bf.n_params):
                best = c
        history.append(summarize_generation(population, generation, epochs))
        if observer is not None:
            observer(generation, history[-1], best)

    return EvolutionResult(best=best, history=history)
