"""Network instantiation, forward/loss/gradient evaluation, and Adam.

A Network is built from a chromosome by propagating shapes through the
layer genes and allocating weight arrays (Gaussian init, zero biases,
prelu slopes at 0.25). The loss is mean categorical cross entropy; a
linear terminal routes through a fused softmax-cross-entropy on the raw
scores, while sigmoid/softmax terminals use direct cross entropy with
probabilities clamped away from 0 and 1.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..genome import (
    Activation,
    Chromosome,
    Conv1D,
    Conv2D,
    Dense,
    Dropout,
    Embedding,
    GridShape,
    InvalidChromosomeError,
    LayerBounds,
    MaxPool1D,
    MaxPool2D,
    SeqShape,
    TaskModality,
    SequenceTask,
    count_parameters,
    flat_size,
    infer_shape,
    validate,
)
from . import layers as L


class Network:
    """Instantiated layers with their weights and Adam accumulators."""

    def __init__(self, impls, modality: TaskModality, num_classes: int,
                 terminal_activation: Activation, dtype, prob_clamp: float,
                 adam_beta1: float, adam_beta2: float, adam_epsilon: float):
        self.layers = impls
        self.modality = modality
        self.num_classes = num_classes
        self.terminal_activation = terminal_activation
        self.dtype = dtype
        self.prob_clamp = prob_clamp
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_epsilon = adam_epsilon
        self.adam_m = [np.zeros_like(p) for p in self.parameter_arrays()]
        self.adam_v = [np.zeros_like(p) for p in self.parameter_arrays()]

    def parameter_arrays(self) -> list[np.ndarray]:
        return [p for impl in self.layers for p in impl.params]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.parameter_arrays())


def build_network(chromosome: Chromosome,
                  modality: TaskModality,
                  num_classes: int,
                  hyper,
                  rng: np.random.Generator,
                  bounds: LayerBounds = LayerBounds()) -> Network:
    """Instantiate every layer of a valid chromosome.

    Weights are drawn layer by layer in order from ``rng``, so a fixed
    seed gives bit-identical networks. The instantiated weight count
    always equals count_parameters() for the same chromosome.
    """
    report = validate(chromosome, modality, num_classes, bounds)
    if not report.ok:
        raise InvalidChromosomeError("; ".join(report.violations))

    dtype = np.dtype(hyper.dtype)
    mean, std = hyper.weight_init_mean, hyper.weight_init_std
    impls = []
    shape = modality.input_shape()
    for gene in chromosome.layers:
        if isinstance(gene, Conv2D):
            assert isinstance(shape, GridShape)
            impls.append(L.Conv2DImpl(shape.channels, gene.filters, gene.kernel,
                                      gene.activation, rng, mean, std, dtype))
        elif isinstance(gene, Conv1D):
            assert isinstance(shape, SeqShape)
            impls.append(L.Conv1DImpl(shape.channels, gene.filters, gene.kernel,
                                      gene.activation, rng, mean, std, dtype))
        elif isinstance(gene, MaxPool2D):
            impls.append(L.MaxPool2DImpl(gene.kernel))
        elif isinstance(gene, MaxPool1D):
            impls.append(L.MaxPool1DImpl(gene.kernel))
        elif isinstance(gene, Dense):
            impls.append(L.DenseImpl(flat_size(shape), gene.units, gene.activation,
                                     rng, mean, std, dtype))
        elif isinstance(gene, Dropout):
            impls.append(L.DropoutImpl(gene.keep_prob))
        elif isinstance(gene, Embedding):
            assert isinstance(modality, SequenceTask)
            impls.append(L.EmbeddingImpl(modality.vocab_size, gene.output_dim,
                                         rng, mean, std, dtype))
        else:
            raise InvalidChromosomeError(f"unknown layer gene {gene!r}")
        shape = infer_shape(gene, shape)

    terminal = chromosome.layers[-1]
    assert isinstance(terminal, Dense)
    net = Network(impls, modality, num_classes, terminal.activation, dtype,
                  hyper.prob_clamp, hyper.adam_beta1, hyper.adam_beta2,
                  hyper.adam_epsilon)
    expected = count_parameters(chromosome, modality, num_classes, bounds)
    assert net.n_params == expected, "weight count drifted from count_parameters"
    return net


def forward(network: Network, batch: np.ndarray, training_mode: bool,
            rng: Optional[np.random.Generator] = None,
            reuse_masks: bool = False) -> np.ndarray:
    """Run the network; dropout is only active in training mode."""
    x = np.asarray(batch)
    if not np.issubdtype(x.dtype, np.integer):
        x = x.astype(network.dtype, copy=False)
    for impl in network.layers:
        x = impl.forward(x, training_mode, rng, reuse_masks)
    return x


def _loss_from_output(network: Network, out: np.ndarray, labels: np.ndarray):
    """Mean categorical cross entropy and its gradient w.r.t. ``out``.

    For a linear terminal ``out`` contains raw scores and the fused
    softmax-cross-entropy gradient is returned instead.
    """
    n = out.shape[0]
    y = labels
    if network.terminal_activation is Activation.LINEAR:
        m = out.max(axis=-1, keepdims=True)
        logits = out - m
        lse = np.log(np.exp(logits).sum(axis=-1, keepdims=True))
        log_p = logits - lse
        loss = -(y * log_p).sum() / n
        d_out = (np.exp(log_p) - y) / n
        return loss, d_out
    clamp = network.prob_clamp
    p = np.clip(out, clamp, 1.0 - clamp)
    loss = -(y * np.log(p)).sum() / n
    inside = (out > clamp) & (out < 1.0 - clamp)
    d_out = np.where(inside, -y / p, 0.0) / n
    return loss, d_out


def loss_and_gradients(network: Network, batch: np.ndarray, labels: np.ndarray,
                       rng: Optional[np.random.Generator] = None,
                       reuse_masks: bool = False):
    """Training-mode loss and analytic gradients for every trainable array.

    Returns (loss, grads) with grads aligned to network.parameter_arrays().
    ``reuse_masks`` replays the dropout masks cached by the previous call,
    which keeps a finite-difference probe of the loss consistent with the
    analytic gradients.
    """
    if batch.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    out = forward(network, batch, training_mode=True, rng=rng, reuse_masks=reuse_masks)
    loss, d = _loss_from_output(network, out, np.asarray(labels, dtype=network.dtype))
    for impl in reversed(network.layers):
        d = impl.backward(d)
        if d is None:
            break
    grads = [g for impl in network.layers for g in impl.grads]
    return float(loss), grads


def loss_only(network: Network, batch: np.ndarray, labels: np.ndarray) -> float:
    """Training-mode loss reusing cached dropout masks (finite-difference probe)."""
    out = forward(network, batch, training_mode=True, rng=None, reuse_masks=True)
    loss, _ = _loss_from_output(network, out, np.asarray(labels, dtype=network.dtype))
    return float(loss)


def adam_step(network: Network, grads, learning_rate: float, step_index: int) -> None:
    """One bias-corrected Adam update, in place."""
    if step_index < 1:
        raise ValueError("step_index must be >= 1")
    b1, b2, eps = network.adam_beta1, network.adam_beta2, network.adam_epsilon
    c1 = 1.0 - b1 ** step_index
    c2 = 1.0 - b2 ** step_index
    for p, g, m, v in zip(network.parameter_arrays(), grads, network.adam_m, network.adam_v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + eps)
