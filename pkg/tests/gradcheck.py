"""Finite-difference gradient verification harness.

Builds small 64-bit networks over a catalog of layer/activation
combinations, computes analytic gradients, and compares every parameter
array against central finite differences. Shared by the unit tests and
the acceptance suite.
"""

import numpy as np

from evonet.genome import (
    Activation,
    Chromosome,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Embedding,
    ImageTask,
    LayerBounds,
    MaxPool1D,
    MaxPool2D,
    SequenceTask,
    random_chromosome,
)
from evonet.nn import TrainingHyper
from evonet.nn.network import build_network, loss_and_gradients

from helpers import finite_difference_grads, relative_error

# loose bounds so the checked networks stay tiny (the math under test does
# not depend on the search-space limits)
LOOSE = LayerBounds(filter_range=(2, 100), conv_kernel_range=(1, 6),
                    pool_kernel_range=(1, 6), dense_units_range=(2, 100),
                    embedding_dim_range=(3, 300))

L, S, SM, R, LK, P = (Activation.LINEAR, Activation.SIGMOID, Activation.SOFTMAX,
                      Activation.RELU, Activation.LEAKY_RELU, Activation.PRELU)

# (name, modality, layers, num_classes)
CONFIGS = [
    ("conv2d_relu", ImageTask(5, 5, 2), (Conv2D(4, 3, R), Dense(3, SM)), 3),
    ("conv2d_prelu_even_kernel", ImageTask(5, 5, 1), (Conv2D(3, 2, P), Dense(2, SM)), 2),
    ("conv2d_linear_k1", ImageTask(4, 4, 3), (Conv2D(5, 1, L), Dense(3, L)), 3),
    ("conv2d_leaky_k4", ImageTask(6, 6, 1), (Conv2D(3, 4, LK), Dense(2, S)), 2),
    ("conv2d_maxpool2", ImageTask(6, 6, 2), (Conv2D(4, 3, R), MaxPool2D(2), Dense(3, SM)), 3),
    ("maxpool3_ragged_crop", ImageTask(5, 5, 1), (Conv2D(3, 3, LK), MaxPool2D(3), Dense(2, L)), 2),
    ("conv2d_dropout_dense", ImageTask(5, 5, 1),
     (Conv2D(4, 3, R), Dropout(0.6), Dense(5, R), Dense(3, SM)), 3),
    ("dense_sigmoid_hidden", ImageTask(4, 4, 1), (Dense(6, S), Dense(3, SM)), 3),
    ("dense_softmax_hidden", ImageTask(4, 4, 1), (Dense(6, SM), Dense(3, L)), 3),
    ("fused_linear_terminal", ImageTask(4, 4, 2), (Conv2D(3, 3, R), Dense(4, L)), 4),
    ("sigmoid_terminal", ImageTask(4, 4, 1), (Conv2D(3, 3, P), Dense(2, S)), 2),
    ("softmax_terminal_deep", ImageTask(6, 6, 1),
     (Conv2D(3, 3, R), Conv2D(4, 3, LK), MaxPool2D(2), Dense(3, SM)), 3),
    ("embedding_dense", SequenceTask(5, 7), (Embedding(4), Dense(2, SM)), 2),
    ("embedding_conv1d_relu", SequenceTask(6, 9), (Embedding(5), Conv1D(4, 3, R), Dense(2, L)), 2),
    ("embedding_conv1d_prelu_pool", SequenceTask(8, 6),
     (Embedding(4), Conv1D(3, 2, P), MaxPool1D(2), Dense(2, SM)), 2),
    ("conv1d_leaky_k1", SequenceTask(5, 5), (Embedding(3), Conv1D(4, 1, LK), Dense(2, S)), 2),
    ("conv1d_linear_k5", SequenceTask(7, 8), (Embedding(4), Conv1D(3, 5, L), Dense(3, SM)), 3),
    ("embedding_conv1d_dropout", SequenceTask(6, 7),
     (Embedding(4), Conv1D(3, 3, R), Dropout(0.7), Dense(2, SM)), 2),
    ("two_conv_pool_stack", ImageTask(8, 8, 1),
     (Conv2D(3, 3, R), Conv2D(4, 2, P), MaxPool2D(2), Dense(4, R), Dense(3, SM)), 3),
    ("multichannel_input", ImageTask(5, 5, 3), (Conv2D(4, 3, LK), Dense(2, SM)), 2),
    ("pool1d_ragged", SequenceTask(7, 6), (Embedding(3), Conv1D(3, 2, R), MaxPool1D(3), Dense(2, L)), 2),
    ("dropout_between_dense", ImageTask(4, 4, 1),
     (Dense(6, R), Dropout(0.5), Dense(3, SM)), 3),
]

GRADCHECK_HYPER = TrainingHyper(weight_init_std=0.3, dtype="float64")


def make_batch(modality, num_classes, rng, batch=3):
    if isinstance(modality, ImageTask):
        x = rng.normal(size=(batch, modality.height, modality.width, modality.channels))
    else:
        x = rng.integers(0, modality.vocab_size, size=(batch, modality.max_length))
    y = np.zeros((batch, num_classes))
    y[np.arange(batch), rng.integers(0, num_classes, batch)] = 1.0
    return x, y


def check_config(name, modality, layers, num_classes, seed):
    """Returns (worst relative error, number of parameter arrays checked)."""
    rng = np.random.default_rng(seed)
    chromosome = Chromosome(0.003, tuple(layers))
    net = build_network(chromosome, modality, num_classes, GRADCHECK_HYPER, rng,
                        bounds=LOOSE)
    x, y = make_batch(modality, num_classes, rng)
    _, analytic = loss_and_gradients(net, x, y, rng)
    numeric = finite_difference_grads(net, x, y)
    worst = max(relative_error(a, f) for a, f in zip(analytic, numeric))
    return worst, len(analytic)


def random_configs(count, seed):
    """Extra seeded random architectures drawn from the real generator."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        modality = ImageTask(6, 6, 1) if i % 2 == 0 else SequenceTask(6, 8)
        bounds = LayerBounds(filter_range=(2, 6), conv_kernel_range=(1, 4),
                             pool_kernel_range=(1, 3), dense_units_range=(2, 8),
                             embedding_dim_range=(3, 6), max_size=4)
        ch = random_chromosome(1 + i % 4, modality, 2, bounds, rng)
        out.append((f"random_{i}", modality, ch.layers, 2, bounds))
    return out


def check_random_config(name, modality, layers, num_classes, bounds, seed):
    rng = np.random.default_rng(seed)
    chromosome = Chromosome(0.003, tuple(layers))
    net = build_network(chromosome, modality, num_classes, GRADCHECK_HYPER, rng,
                        bounds=bounds)
    x, y = make_batch(modality, num_classes, rng)
    _, analytic = loss_and_gradients(net, x, y, rng)
    numeric = finite_difference_grads(net, x, y)
    return max(relative_error(a, f) for a, f in zip(analytic, numeric)), len(analytic)
