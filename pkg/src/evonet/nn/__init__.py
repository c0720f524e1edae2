"""Self-contained trainable network backend (numpy only) plus a
deterministic surrogate evaluator for exercising the evolution engine
without any training."""

from .network import Network, adam_step, build_network, forward, loss_and_gradients
from .surrogate import SurrogateEvaluator, surrogate_outcome
from .training import (
    EvaluatorOutcome,
    MicroNNEvaluator,
    NonFiniteLossError,
    TrainingHyper,
    fit_network,
    test_accuracy,
    train_and_validate,
)

__all__ = [
    "Network", "adam_step", "build_network", "forward", "loss_and_gradients",
    "SurrogateEvaluator", "surrogate_outcome",
    "EvaluatorOutcome", "MicroNNEvaluator", "NonFiniteLossError",
    "TrainingHyper", "fit_network", "test_accuracy", "train_and_validate",
]
