"""Deterministic training-free evaluator for exercising the engine.

The pseudo validation error is an analytic function of the architecture,
documented here and in the README:

    conv_count = number of convolution layers (1-D or 2-D)
    lr_penalty = 0.1 * |log10(learning_rate / 0.003)|
    val_error  = clip(0.5 * 0.8**conv_count + lr_penalty, 0.02, 0.95)

So deeper convolutional stacks score better (toward a floor), and
learning rates near 3e-3 score better than ones far from it on a log
scale. Identical chromosomes always produce identical outcomes, across
runs and platforms.
"""

from __future__ import annotations

import math

from ..genome import Chromosome, Conv1D, Conv2D, LayerBounds, TaskModality, count_parameters
from .training import EvaluatorOutcome

SURROGATE_OPTIMAL_LR = 3e-3


def surrogate_outcome(chromosome: Chromosome,
                      modality: TaskModality,
                      num_classes: int,
                      bounds: LayerBounds = LayerBounds()) -> EvaluatorOutcome:
    conv_count = sum(1 for layer in chromosome.layers if isinstance(layer, (Conv1D, Conv2D)))
    lr_penalty = 0.1 * abs(math.log10(chromosome.learning_rate / SURROGATE_OPTIMAL_LR))
    val_error = min(0.95, max(0.02, 0.5 * 0.8 ** conv_count + lr_penalty))
    n_params = count_parameters(chromosome, modality, num_classes, bounds)
    return EvaluatorOutcome(val_error=val_error, n_params=n_params)


class SurrogateEvaluator:
    """Evaluator backend with the interface of MicroNNEvaluator but no training."""

    def __init__(self, bounds: LayerBounds = LayerBounds()):
        self.bounds = bounds

    def evaluate(self, chromosome: Chromosome, dataset, epochs: int,
                 rng=None) -> EvaluatorOutcome:
        return surrogate_outcome(chromosome, dataset.modality, dataset.num_classes,
                                 self.bounds)
