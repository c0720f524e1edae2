"""Fitness scoring: validation error plus a complexity penalty.

fitness = val_error + alpha * (1 - 1/n_params)

Lower is better. With the default alpha of 1 the complexity term is close
to 1 for any realistically sized network, so in practice it acts as a
tie-breaker that prefers smaller networks at equal validation error.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .genome import Chromosome, FitnessRecord

__all__ = ["FitnessRecord", "fitness_score", "evaluate", "worst_case_score"]


def fitness_score(val_error: float, n_params: int, alpha: float = 1.0) -> float:
    """Combine validation error and parameter count into one score.

    ``val_error`` must lie in [0, 1] and ``n_params`` must be at least 1
    (every network has a terminal dense layer, so a zero count signals a
    bug upstream).
    """
    if not 0.0 <= val_error <= 1.0:
        raise ValueError(f"val_error {val_error} outside [0, 1]")
    if n_params < 1:
        raise ValueError(f"n_params must be >= 1, got {n_params}")
    return val_error + alpha * (1.0 - 1.0 / n_params)


def worst_case_score(alpha: float) -> float:
    """Sentinel score assigned to chromosomes whose training diverged.

    Strictly dominates every achievable score (those stay below 1 + alpha).
    """
    return 2.0 * alpha + 1.0


def evaluate(chromosome: Chromosome,
             dataset,
             epochs: int,
             alpha: float,
             evaluator,
             rng: Optional[np.random.Generator] = None) -> FitnessRecord:
    """Train and score a chromosome, caching the record on it.

    ``evaluator`` is any object with an ``evaluate(chromosome, dataset,
    epochs, rng)`` method returning an outcome with ``val_error`` and
    ``n_params`` fields (the trainable micro network or the deterministic
    surrogate). Evaluator failures, including non-finite training loss,
    propagate to the caller.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    outcome = evaluator.evaluate(chromosome, dataset, epochs, rng)
    record = FitnessRecord(
        val_error=float(outcome.val_error),
        n_params=int(outcome.n_params),
        score=fitness_score(float(outcome.val_error), int(outcome.n_params), alpha),
        alpha=alpha,
        epochs_used=epochs,
    )
    chromosome.fitness = record
    return record
