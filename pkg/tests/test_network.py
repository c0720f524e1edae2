"""Trainable backend: initialization, forward semantics, loss, Adam, training."""

import math

import numpy as np
import pytest

from evonet.data import synth_image_dataset
from evonet.genome import (
    Activation,
    Chromosome,
    Conv2D,
    Dense,
    Dropout,
    ImageTask,
    InvalidChromosomeError,
    count_parameters,
    random_chromosome,
    LayerBounds,
    SequenceTask,
)
from evonet.fitness import evaluate
from evonet.nn import (
    MicroNNEvaluator,
    NonFiniteLossError,
    TrainingHyper,
    train_and_validate,
)
from evonet.nn.network import adam_step, build_network, forward, loss_and_gradients

IMAGE = ImageTask(8, 8, 1)
F64 = TrainingHyper(dtype="float64")


def simple_chromosome():
    return Chromosome(0.003, (Conv2D(12, 3, Activation.RELU),
                              Dense(3, Activation.SOFTMAX)))


# ── build_network ────────────────────────────────────────────────────────────

def test_instantiated_weight_count_matches_count_parameters():
    rng = np.random.default_rng(1)
    for i in range(40):
        modality = IMAGE if i % 2 == 0 else SequenceTask(20, 50)
        ch = random_chromosome(1 + i % 7, modality, 3, LayerBounds(), rng)
        net = build_network(ch, modality, 3, TrainingHyper(), rng)
        assert net.n_params == count_parameters(ch, modality, 3)


def test_same_seed_gives_bit_identical_weights():
    ch = simple_chromosome()
    a = build_network(ch, IMAGE, 3, TrainingHyper(), np.random.default_rng(5))
    b = build_network(ch, IMAGE, 3, TrainingHyper(), np.random.default_rng(5))
    for pa, pb in zip(a.parameter_arrays(), b.parameter_arrays()):
        assert np.array_equal(pa, pb)


def test_weight_initialization_statistics():
    """Mean/std of a million initialized weights within 3 standard errors."""
    modality = ImageTask(100, 100, 1)
    ch = Chromosome(0.003, (Dense(100, Activation.RELU), Dense(3, Activation.SOFTMAX)))
    net = build_network(ch, modality, 3, TrainingHyper(), np.random.default_rng(7))
    weights = net.layers[0].W.ravel()
    n = weights.size
    assert n == 1_000_000
    se_mean = 0.01 / math.sqrt(n)
    se_std = 0.01 / math.sqrt(2 * n)
    assert abs(float(weights.mean()) - 0.00) < 3 * se_mean
    assert abs(float(weights.std()) - 0.01) < 3 * se_std
    assert np.all(net.layers[0].b == 0.0)


def test_build_rejects_invalid_chromosome():
    bad = Chromosome(0.003, (Conv2D(10, 3, Activation.RELU), Dense(5, Activation.SOFTMAX)))
    with pytest.raises(InvalidChromosomeError):
        build_network(bad, IMAGE, 3, TrainingHyper(), np.random.default_rng(0))


# ── forward ──────────────────────────────────────────────────────────────────

def test_softmax_rows_sum_to_one():
    net = build_network(simple_chromosome(), IMAGE, 3, F64, np.random.default_rng(2))
    x = np.random.default_rng(3).normal(size=(17, 8, 8, 1))
    out = forward(net, x, training_mode=False)
    assert np.allclose(out.sum(axis=1), 1.0, atol=1e-6)
    assert out.shape == (17, 3)


def test_dropout_is_identity_at_inference():
    ch = Chromosome(0.003, (Conv2D(10, 3, Activation.RELU), Dropout(0.4),
                            Dense(3, Activation.SOFTMAX)))
    net = build_network(ch, IMAGE, 3, F64, np.random.default_rng(2))
    x = np.random.default_rng(3).normal(size=(5, 8, 8, 1))
    a = forward(net, x, training_mode=False)
    b = forward(net, x, training_mode=False)
    assert np.array_equal(a, b)
    ch_plain = Chromosome(0.003, (Conv2D(10, 3, Activation.RELU),
                                  Dense(3, Activation.SOFTMAX)))
    plain = build_network(ch_plain, IMAGE, 3, F64, np.random.default_rng(2))
    assert np.allclose(a, forward(plain, x, training_mode=False))


def test_single_dense_linear_matches_hand_matmul():
    modality = ImageTask(4, 4, 1)
    ch = Chromosome(0.003, (Dense(3, Activation.LINEAR),))
    net = build_network(ch, modality, 3, F64, np.random.default_rng(4))
    x = np.random.default_rng(5).normal(size=(6, 4, 4, 1))
    out = forward(net, x, training_mode=False)
    W, b = net.layers[0].W, net.layers[0].b
    # independent oracle: explicit loops over samples and units
    for i in range(6):
        flat = x[i].reshape(-1)
        for j in range(3):
            expected = sum(flat[k] * W[k, j] for k in range(16)) + b[j]
            assert out[i, j] == pytest.approx(expected, rel=1e-12)


def test_dropout_training_expectation_matches_inference():
    """Inverted scaling: the mean over stochastic passes equals the input."""
    ch = Chromosome(0.003, (Conv2D(10, 1, Activation.LINEAR), Dropout(0.7),
                            Dense(3, Activation.LINEAR)))
    net = build_network(ch, IMAGE, 3, F64, np.random.default_rng(6))
    drop = net.layers[1]
    x = np.random.default_rng(7).normal(size=(2, 8, 8, 10))
    rng = np.random.default_rng(8)
    n = 10_000
    acc = np.zeros_like(x)
    for _ in range(n):
        acc += drop.forward(x, training=True, rng=rng)
    mean = acc / n
    se = np.abs(x) * math.sqrt((1 - 0.7) / (0.7 * n)) + 1e-12
    assert np.all(np.abs(mean - x) <= 3.5 * se)


# ── loss ─────────────────────────────────────────────────────────────────────

def test_uniform_prediction_loss_is_log_c():
    for classes, modality in ((3, IMAGE), (7, ImageTask(5, 5, 1))):
        ch = Chromosome(0.003, (Dense(classes, Activation.SOFTMAX),))
        net = build_network(ch, modality, classes, F64, np.random.default_rng(0))
        net.layers[0].W[:] = 0.0  # zero weights: exactly uniform output
        x = np.random.default_rng(1).normal(size=(10,) + (modality.height, modality.width, 1))
        y = np.zeros((10, classes))
        y[np.arange(10), np.arange(10) % classes] = 1.0
        loss, _ = loss_and_gradients(net, x, y)
        assert loss == pytest.approx(math.log(classes), rel=1e-12)


def test_saturated_correct_predictions_have_zero_gradient():
    """An exact-fit minimum: clamped sigmoid outputs saturate at the clamp
    boundary, so every gradient is exactly zero."""
    modality = ImageTask(1, 2, 1)
    ch = Chromosome(0.003, (Dense(2, Activation.SIGMOID),))
    net = build_network(ch, modality, 2, F64, np.random.default_rng(0))
    net.layers[0].W[:] = np.array([[60.0, -60.0], [-60.0, 60.0]])
    net.layers[0].b[:] = 0.0
    x = np.array([[[[1.0], [0.0]]], [[[0.0], [1.0]]]])  # one-hot pixels
    y = np.array([[1.0, 0.0], [0.0, 1.0]])
    loss, grads = loss_and_gradients(net, x, y)
    assert loss == pytest.approx(-math.log(1.0 - 1e-7), rel=1e-6)
    for g in grads:
        assert np.all(g == 0.0)


# ── adam ─────────────────────────────────────────────────────────────────────

def test_adam_first_step_is_signed_learning_rate():
    net = build_network(simple_chromosome(), IMAGE, 3, F64, np.random.default_rng(1))
    params = net.parameter_arrays()
    before = [p.copy() for p in params]
    grads = [np.random.default_rng(2).normal(size=p.shape) + 0.5 for p in params]
    adam_step(net, grads, 0.02, 1)
    for p, b, g in zip(params, before, grads):
        assert np.allclose(p - b, -0.02 * np.sign(g), atol=0.02 * 1e-3)


def test_adam_zero_gradient_leaves_parameters_unchanged():
    net = build_network(simple_chromosome(), IMAGE, 3, F64, np.random.default_rng(1))
    before = [p.copy() for p in net.parameter_arrays()]
    adam_step(net, [np.zeros_like(p) for p in before], 0.05, 1)
    for p, b in zip(net.parameter_arrays(), before):
        assert np.array_equal(p, b)


def test_adam_step_index_must_be_positive():
    net = build_network(simple_chromosome(), IMAGE, 3, F64, np.random.default_rng(1))
    with pytest.raises(ValueError):
        adam_step(net, [np.zeros_like(p) for p in net.parameter_arrays()], 0.05, 0)


# ── training ─────────────────────────────────────────────────────────────────

def small_image_dataset(seed=1):
    return synth_image_dataset(60, 30, 30, classes=3, grid=(8, 8), noise_std=0.3,
                               seed=seed)


def test_identical_seeded_trainings_are_identical():
    ds = small_image_dataset()
    hyper = TrainingHyper(batch_size=16)
    a = train_and_validate(simple_chromosome(), ds, 2, hyper, np.random.default_rng(9))
    b = train_and_validate(simple_chromosome(), ds, 2, hyper, np.random.default_rng(9))
    assert a == b


def test_linearly_separable_toy_beats_chance():
    ds = small_image_dataset()
    ch = Chromosome(0.003, (Dense(20, Activation.RELU), Dense(3, Activation.SOFTMAX)))
    out = train_and_validate(ch, ds, 1, TrainingHyper(batch_size=8),
                             np.random.default_rng(10))
    assert out.val_error < 0.5


def test_epochs_zero_rejected():
    with pytest.raises(ValueError):
        train_and_validate(simple_chromosome(), small_image_dataset(), 0,
                           TrainingHyper(), np.random.default_rng(0))


def test_golden_micro_run_pins_val_error_and_score():
    ds = small_image_dataset()
    record = evaluate(simple_chromosome(), ds, 3, 1.0,
                      MicroNNEvaluator(TrainingHyper(batch_size=32)),
                      np.random.default_rng(21))
    assert record.val_error == 0.0
    assert record.n_params == 2427
    assert record.score == pytest.approx(1.0 - 1.0 / 2427, abs=0)


def test_loss_trace_decreases_on_pinned_seed():
    ds = small_image_dataset()
    out = train_and_validate(simple_chromosome(), ds, 3,
                             TrainingHyper(batch_size=32), np.random.default_rng(21))
    assert out.train_loss_trace[2] < out.train_loss_trace[0]
    assert all(np.isfinite(out.train_loss_trace))


def test_divergence_raises_non_finite_loss_error():
    ds = small_image_dataset()
    ch = Chromosome(0.003, (Conv2D(10, 3, Activation.RELU),
                            Conv2D(10, 3, Activation.RELU),
                            Dense(3, Activation.LINEAR)))
    with pytest.raises(NonFiniteLossError):
        train_and_validate(ch, ds, 1, TrainingHyper(batch_size=16, weight_init_std=1e20),
                           np.random.default_rng(0))


def test_engine_turns_divergence_into_worst_case_record():
    from evonet.evolution import EvolutionConfig, evaluate_cached

    class Exploding:
        def evaluate(self, chromosome, dataset, epochs, rng):
            raise NonFiniteLossError("boom")

    ds = small_image_dataset()
    ch = simple_chromosome()
    config = EvolutionConfig(population_size=10, seed=0)
    record = evaluate_cached(ch, ds, 3, config, Exploding(), None)
    assert record.score == 3.0  # 2 * alpha + 1
    assert record.val_error == 1.0
    assert ch.fitness is record


def test_micro_evaluator_requires_rng():
    with pytest.raises(ValueError):
        MicroNNEvaluator().evaluate(simple_chromosome(), small_image_dataset(), 1, None)
