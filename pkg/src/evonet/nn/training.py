"""Training loop: seeded shuffling, minibatch Adam, validation error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..genome import Chromosome, LayerBounds
from .network import adam_step, build_network, forward, loss_and_gradients


class NonFiniteLossError(FloatingPointError):
    """Training produced a NaN or infinite loss (typically a diverging
    learning rate); the evaluation of this chromosome is abandoned."""


@dataclass(frozen=True)
class TrainingHyper:
    """Fixed (non-evolved) training settings.

    Weight init is Gaussian(0.00, 0.01) and the optimiser is Adam; batch
    size defaults to 1024 but is routinely lowered for small datasets.
    ``dtype`` selects 32-bit compute (default) or 64-bit for gradient
    checking.
    """

    batch_size: int = 1024
    weight_init_mean: float = 0.00
    weight_init_std: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    prob_clamp: float = 1e-7
    dtype: str = "float32"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.weight_init_std <= 0:
            raise ValueError("weight_init_std must be > 0")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True)
class EvaluatorOutcome:
    val_error: float
    n_params: int
    train_loss_trace: tuple[float, ...] = ()


def misclassification_rate(network, features: np.ndarray, labels: np.ndarray,
                           batch_size: int = 4096) -> float:
    """Argmax error rate in inference mode."""
    wrong = 0
    truth = np.argmax(labels, axis=1)
    for start in range(0, features.shape[0], batch_size):
        out = forward(network, features[start:start + batch_size], training_mode=False)
        wrong += int(np.sum(np.argmax(out, axis=1) != truth[start:start + batch_size]))
    return wrong / features.shape[0]


def fit_network(chromosome: Chromosome,
                dataset,
                epochs: int,
                hyper: TrainingHyper,
                rng: np.random.Generator,
                bounds: LayerBounds = LayerBounds()):
    """Build and train a network; returns (network, per-epoch loss trace).

    Training data is reshuffled each epoch from ``rng``; one Adam step per
    minibatch. Raises NonFiniteLossError as soon as a batch loss stops
    being finite.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    net = build_network(chromosome, dataset.modality, dataset.num_classes, hyper,
                        rng, bounds)
    x_train = dataset.train.features
    y_train = dataset.train.labels
    n = x_train.shape[0]

    trace = []
    step = 0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(epochs):
            order = rng.permutation(n)
            batch_losses = []
            for start in range(0, n, hyper.batch_size):
                idx = order[start:start + hyper.batch_size]
                loss, grads = loss_and_gradients(net, x_train[idx], y_train[idx], rng)
                if not np.isfinite(loss):
                    raise NonFiniteLossError(
                        f"non-finite training loss at step {step + 1} "
                        f"(learning rate {chromosome.learning_rate:.3g})")
                step += 1
                adam_step(net, grads, chromosome.learning_rate, step)
                batch_losses.append(loss)
            trace.append(float(np.mean(batch_losses)))
    return net, tuple(trace)


def train_and_validate(chromosome: Chromosome,
                       dataset,
                       epochs: int,
                       hyper: TrainingHyper,
                       rng: np.random.Generator,
                       bounds: LayerBounds = LayerBounds()) -> EvaluatorOutcome:
    """Train a chromosome's network and measure validation error."""
    net, trace = fit_network(chromosome, dataset, epochs, hyper, rng, bounds)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        val_error = misclassification_rate(net, dataset.validation.features,
                                           dataset.validation.labels)
    return EvaluatorOutcome(val_error=float(val_error), n_params=net.n_params,
                            train_loss_trace=trace)


def test_accuracy(chromosome: Chromosome,
                  dataset,
                  epochs: int,
                  hyper: TrainingHyper,
                  rng: np.random.Generator,
                  bounds: LayerBounds = LayerBounds()) -> float:
    """Retrain and measure accuracy on the held-out test partition.

    This is the only place the test partition is ever consumed; fitness
    evaluation never sees it.
    """
    net, _ = fit_network(chromosome, dataset, epochs, hyper, rng, bounds)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        err = misclassification_rate(net, dataset.test.features, dataset.test.labels)
    return 1.0 - err


class MicroNNEvaluator:
    """Evaluator backend that actually trains networks."""

    def __init__(self, hyper: TrainingHyper = TrainingHyper(),
                 bounds: LayerBounds = LayerBounds()):
        self.hyper = hyper
        self.bounds = bounds

    def evaluate(self, chromosome: Chromosome, dataset, epochs: int,
                 rng: np.random.Generator) -> EvaluatorOutcome:
        if rng is None:
            raise ValueError("MicroNNEvaluator needs a seeded generator")
        return train_and_validate(chromosome, dataset, epochs, self.hyper, rng,
                                  self.bounds)
