"""Chromosome encoding for evolvable neural networks.

A chromosome carries two genes: a learning rate and an ordered list of
layer genes describing a network. Layer genes are small frozen dataclasses
(one per layer kind), and the chromosome always ends with a terminal
fully-connected layer emitting one score per class.

This module owns everything structural: random generation of layers and
chromosomes, validity checking against a task modality, shape inference,
trainable-parameter counting, and JSON (de)serialization.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np


# ── activations ──────────────────────────────────────────────────────────────

class Activation(str, Enum):
    LINEAR = "linear"
    LEAKY_RELU = "leaky_relu"
    PRELU = "prelu"
    RELU = "relu"
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"


# Legal activation sets per layer role.
CONV_ACTIVATIONS = (Activation.LINEAR, Activation.LEAKY_RELU, Activation.PRELU, Activation.RELU)
DENSE_ACTIVATIONS = (Activation.LINEAR, Activation.SIGMOID, Activation.SOFTMAX, Activation.RELU)
TERMINAL_ACTIVATIONS = (Activation.LINEAR, Activation.SIGMOID, Activation.SOFTMAX)


# ── task modality ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ImageTask:
    """2-D image input: fixed height x width grid with channels."""

    height: int
    width: int
    channels: int = 1

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.channels < 1:
            raise ValueError("image dimensions must all be >= 1")

    def input_shape(self) -> "GridShape":
        return GridShape(self.height, self.width, self.channels)


@dataclass(frozen=True)
class SequenceTask:
    """Integer token sequences of a fixed length.

    ``vocab_size`` is the size of the token index space, i.e. the number of
    rows an embedding table needs (including any reserved padding index).
    """

    max_length: int
    vocab_size: int

    def __post_init__(self):
        if self.max_length < 1 or self.vocab_size < 1:
            raise ValueError("sequence dimensions must all be >= 1")

    def input_shape(self) -> "SeqShape":
        return SeqShape(self.max_length, 1)


TaskModality = Union[ImageTask, SequenceTask]


# ── shapes ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GridShape:
    height: int
    width: int
    channels: int


@dataclass(frozen=True)
class SeqShape:
    length: int
    channels: int


@dataclass(frozen=True)
class FlatShape:
    size: int


Shape = Union[GridShape, SeqShape, FlatShape]


# ── layer genes ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Conv1D:
    filters: int
    kernel: int
    activation: Activation


@dataclass(frozen=True)
class Conv2D:
    filters: int
    kernel: int  # square kernel side length
    activation: Activation


@dataclass(frozen=True)
class MaxPool1D:
    kernel: int


@dataclass(frozen=True)
class MaxPool2D:
    kernel: int


@dataclass(frozen=True)
class Dense:
    units: int
    activation: Activation


@dataclass(frozen=True)
class Dropout:
    keep_prob: float


@dataclass(frozen=True)
class Embedding:
    output_dim: int


Layer = Union[Conv1D, Conv2D, MaxPool1D, MaxPool2D, Dense, Dropout, Embedding]

# Wire names used by the JSON chromosome document.
_LAYER_TYPE_NAMES = {
    Conv1D: "conv1d",
    Conv2D: "conv2d",
    MaxPool1D: "maxpool1d",
    MaxPool2D: "maxpool2d",
    Dense: "dense",
    Dropout: "dropout",
    Embedding: "embedding",
}


# ── bounds ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LayerBounds:
    """Inclusive sampling bounds for layer hyperparameters.

    Defaults match the search-space limits this framework was designed
    around: filters and dense units in [10, 100], convolution and pooling
    kernels in [1, 6], embedding output dimension in [100, 300], at most
    7 evolvable layers, and learning rates in [1e-4, 1e-1].
    """

    filter_range: tuple[int, int] = (10, 100)
    conv_kernel_range: tuple[int, int] = (1, 6)
    pool_kernel_range: tuple[int, int] = (1, 6)
    dense_units_range: tuple[int, int] = (10, 100)
    embedding_dim_range: tuple[int, int] = (100, 300)
    learning_rate_range: tuple[float, float] = (1e-4, 1e-1)
    max_size: int = 7

    def __post_init__(self):
        for name in ("filter_range", "conv_kernel_range", "pool_kernel_range",
                     "dense_units_range", "embedding_dim_range", "learning_rate_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
        lo, _ = self.learning_rate_range
        if lo <= 0:
            raise ValueError("learning rates must be positive")
        if self.max_size < 1:
            raise ValueError("max_size must be >= 1")


# ── fitness record ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FitnessRecord:
    """Cached evaluation result attached to a chromosome.

    ``score`` is normally ``val_error + alpha * (1 - 1/n_params)``; for
    chromosomes whose training diverged it is instead the worst-case
    sentinel ``2*alpha + 1``, which dominates every achievable score.
    """

    val_error: float
    n_params: int
    score: float
    alpha: float = 1.0
    epochs_used: int = 0


@dataclass
class Chromosome:
    """One candidate solution: a learning rate plus ordered layer genes.

    The layer list always ends with the terminal Dense layer. ``fitness``
    is a mutable cache slot; everything else is treated as immutable once
    constructed (layers are stored as a tuple).
    """

    learning_rate: float
    layers: tuple[Layer, ...]
    fitness: Optional[FitnessRecord] = None

    def __post_init__(self):
        self.layers = tuple(self.layers)

    @property
    def interior_size(self) -> int:
        """Number of evolvable layers (terminal Dense excluded)."""
        return len(self.layers) - 1

    def with_fitness(self, record: Optional[FitnessRecord]) -> "Chromosome":
        return Chromosome(self.learning_rate, self.layers, record)

    def same_genes(self, other: "Chromosome") -> bool:
        """True when learning rate and layer list are both identical."""
        return self.learning_rate == other.learning_rate and self.layers == other.layers

    def describe(self) -> str:
        parts = [f"lr={self.learning_rate:.3g}"]
        parts += [_layer_summary(layer) for layer in self.layers]
        return " | ".join(parts)


def _layer_summary(layer: Layer) -> str:
    name = _LAYER_TYPE_NAMES[type(layer)]
    fields = {k: v for k, v in vars(layer).items()}
    if "activation" in fields:
        fields["activation"] = fields["activation"].value
    inner = ",".join(f"{k}={v}" for k, v in fields.items())
    return f"{name}({inner})"


# ── errors ───────────────────────────────────────────────────────────────────

class LayerNotApplicableError(ValueError):
    """A layer cannot consume the shape it was given."""


class InvalidChromosomeError(ValueError):
    """A chromosome failed validation where a valid one was required."""


class RetryExhaustedError(RuntimeError):
    """Random generation kept producing invalid architectures."""


class ChromosomeParseError(ValueError):
    """A chromosome document is not well-formed text."""


class ChromosomeSchemaError(ValueError):
    """A chromosome document violates the documented schema."""


# ── validity report ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ValidityReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


# ── random generation ────────────────────────────────────────────────────────

def sample_learning_rate(bounds: LayerBounds, rng: np.random.Generator) -> float:
    """Log-uniform draw from the learning-rate range."""
    lo, hi = bounds.learning_rate_range
    return float(10.0 ** rng.uniform(math.log10(lo), math.log10(hi)))


def _sample_int(rng: np.random.Generator, lo_hi: tuple[int, int]) -> int:
    lo, hi = lo_hi
    return int(rng.integers(lo, hi + 1))


def _sample_keep_prob(rng: np.random.Generator) -> float:
    # open interval (0, 1); rng.random() can return exactly 0.0
    while True:
        p = float(rng.random())
        if 0.0 < p < 1.0:
            return p


def _sample_activation(rng: np.random.Generator, choices) -> Activation:
    return choices[int(rng.integers(len(choices)))]


def _make_conv(two_d: bool, bounds: LayerBounds, rng: np.random.Generator) -> Layer:
    filters = _sample_int(rng, bounds.filter_range)
    kernel = _sample_int(rng, bounds.conv_kernel_range)
    act = _sample_activation(rng, CONV_ACTIVATIONS)
    return Conv2D(filters, kernel, act) if two_d else Conv1D(filters, kernel, act)


def _make_pool(two_d: bool, bounds: LayerBounds, rng: np.random.Generator) -> Layer:
    kernel = _sample_int(rng, bounds.pool_kernel_range)
    return MaxPool2D(kernel) if two_d else MaxPool1D(kernel)


def _make_dense(bounds: LayerBounds, rng: np.random.Generator) -> Dense:
    return Dense(_sample_int(rng, bounds.dense_units_range),
                 _sample_activation(rng, DENSE_ACTIVATIONS))


def random_layer(context: str,
                 dropout_allowed: bool,
                 bounds: LayerBounds,
                 rng: np.random.Generator,
                 modality: Optional[TaskModality] = None) -> Layer:
    """Draw one random layer gene.

    ``context`` is ``"cnn"`` while convolution/pooling layers are still
    admissible and ``"non_cnn"`` once the architecture has gone fully
    connected. In cnn context the layer kind is drawn uniformly from
    {convolution, dense, max pooling, dropout} (dropout only when allowed,
    and the first two kinds only when allowed leaves them); in non-cnn
    context from {dense, dropout}. Hyperparameters are uniform within
    ``bounds`` and activations uniform over the kind's legal set.

    When ``modality`` is given, convolution and pooling dimensionality is
    pinned to match it (2-D for images, 1-D for sequences); otherwise the
    dimensionality is itself a coin flip.
    """
    if context not in ("cnn", "non_cnn"):
        raise ValueError(f"unknown context {context!r}")
    two_d = rng.random() < 0.5 if modality is None else isinstance(modality, ImageTask)

    if context == "cnn":
        kinds = ["conv", "dense", "pool", "dropout"] if dropout_allowed else ["conv"]
    else:
        kinds = ["dense", "dropout"] if dropout_allowed else ["dense"]
    kind = kinds[int(rng.integers(len(kinds)))] if len(kinds) > 1 else kinds[0]

    if kind == "conv":
        return _make_conv(two_d, bounds, rng)
    if kind == "pool":
        return _make_pool(two_d, bounds, rng)
    if kind == "dense":
        return _make_dense(bounds, rng)
    return Dropout(_sample_keep_prob(rng))


def fresh_layer(position: int,
                preceding: list[Layer],
                modality: TaskModality,
                bounds: LayerBounds,
                rng: np.random.Generator) -> Layer:
    """Generate a layer for insertion/replacement at ``position``.

    Sequence architectures keep an embedding at position 0, so a fresh
    layer there is always an embedding (this is how the embedding output
    dimension evolves). Elsewhere the context is derived from the layers
    before the position.
    """
    if isinstance(modality, SequenceTask) and position == 0:
        return Embedding(_sample_int(rng, bounds.embedding_dim_range))
    context = "non_cnn" if any(isinstance(l, Dense) for l in preceding) else "cnn"
    return random_layer(context, dropout_allowed=position > 0, bounds=bounds,
                        rng=rng, modality=modality)


GENERATION_RETRY_LIMIT = 100


def random_chromosome(size: int,
                      modality: TaskModality,
                      num_classes: int,
                      bounds: LayerBounds,
                      rng: np.random.Generator) -> Chromosome:
    """Generate a random valid chromosome with ``size`` evolvable layers.

    Layers are drawn front to back: the first layer is a convolution
    (an embedding for sequence tasks), dropout is forbidden at position 0,
    and once a dense layer appears only dense/dropout layers follow. A
    terminal Dense sized to ``num_classes`` is appended. The learning rate
    is drawn log-uniformly. Size requests beyond ``bounds.max_size`` are
    clamped. Invalid drafts (e.g. pooling that collapses a dimension) are
    discarded and regenerated, up to ``GENERATION_RETRY_LIMIT`` attempts.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    size = min(size, bounds.max_size)

    for _ in range(GENERATION_RETRY_LIMIT):
        layers: list[Layer] = []
        context = "cnn"
        for i in range(size):
            if isinstance(modality, SequenceTask) and i == 0:
                layer: Layer = Embedding(_sample_int(rng, bounds.embedding_dim_range))
            else:
                layer = random_layer(context, dropout_allowed=i > 0, bounds=bounds,
                                     rng=rng, modality=modality)
            layers.append(layer)
            if isinstance(layer, Dense):
                context = "non_cnn"
        layers.append(Dense(num_classes, _sample_activation(rng, TERMINAL_ACTIVATIONS)))
        draft = Chromosome(sample_learning_rate(bounds, rng), tuple(layers))
        if validate(draft, modality, num_classes, bounds).ok:
            return draft
    raise RetryExhaustedError(
        f"no valid architecture of size {size} found for {modality} "
        f"after {GENERATION_RETRY_LIMIT} attempts; bounds and modality may conflict")


# ── shape inference ──────────────────────────────────────────────────────────

def infer_shape(layer: Layer, shape: Shape) -> Shape:
    """Propagate a shape through one layer.

    Convolutions use same padding with stride 1 (spatial extents are
    preserved, channels become the filter count). Max pooling divides
    spatial extents by its kernel with floor (stride = kernel). Dense
    consumes any shape through an implicit flatten. Dropout is the
    identity. Embedding maps a raw token sequence, seq(len, 1), to
    seq(len, output_dim).

    Raises LayerNotApplicableError when the layer cannot consume the
    shape (e.g. a 2-D convolution on a flat shape).
    """
    if isinstance(layer, Conv2D):
        if not isinstance(shape, GridShape):
            raise LayerNotApplicableError(f"conv2d cannot consume {shape}")
        return GridShape(shape.height, shape.width, layer.filters)
    if isinstance(layer, Conv1D):
        if not isinstance(shape, SeqShape):
            raise LayerNotApplicableError(f"conv1d cannot consume {shape}")
        return SeqShape(shape.length, layer.filters)
    if isinstance(layer, MaxPool2D):
        if not isinstance(shape, GridShape):
            raise LayerNotApplicableError(f"maxpool2d cannot consume {shape}")
        return GridShape(shape.height // layer.kernel, shape.width // layer.kernel,
                         shape.channels)
    if isinstance(layer, MaxPool1D):
        if not isinstance(shape, SeqShape):
            raise LayerNotApplicableError(f"maxpool1d cannot consume {shape}")
        return SeqShape(shape.length // layer.kernel, shape.channels)
    if isinstance(layer, Dense):
        return FlatShape(layer.units)
    if isinstance(layer, Dropout):
        return shape
    if isinstance(layer, Embedding):
        if not (isinstance(shape, SeqShape) and shape.channels == 1):
            raise LayerNotApplicableError(f"embedding cannot consume {shape}")
        return SeqShape(shape.length, layer.output_dim)
    raise LayerNotApplicableError(f"unknown layer {layer!r}")


def flat_size(shape: Shape) -> int:
    if isinstance(shape, GridShape):
        return shape.height * shape.width * shape.channels
    if isinstance(shape, SeqShape):
        return shape.length * shape.channels
    return shape.size


def _min_extent(shape: Shape) -> int:
    if isinstance(shape, GridShape):
        return min(shape.height, shape.width, shape.channels)
    if isinstance(shape, SeqShape):
        return min(shape.length, shape.channels)
    return shape.size


# ── validation ───────────────────────────────────────────────────────────────

def _check_bounds(i: int, layer: Layer, bounds: LayerBounds, out: list[str]) -> None:
    def rng_ok(value, lo_hi):
        return lo_hi[0] <= value <= lo_hi[1]

    if isinstance(layer, (Conv1D, Conv2D)):
        if not rng_ok(layer.filters, bounds.filter_range):
            out.append(f"layer {i}: filters {layer.filters} out of {list(bounds.filter_range)}")
        if not rng_ok(layer.kernel, bounds.conv_kernel_range):
            out.append(f"layer {i}: kernel {layer.kernel} out of {list(bounds.conv_kernel_range)}")
        if layer.activation not in CONV_ACTIVATIONS:
            out.append(f"layer {i}: activation {layer.activation.value} illegal for convolution")
    elif isinstance(layer, (MaxPool1D, MaxPool2D)):
        if not rng_ok(layer.kernel, bounds.pool_kernel_range):
            out.append(f"layer {i}: kernel {layer.kernel} out of {list(bounds.pool_kernel_range)}")
    elif isinstance(layer, Dropout):
        if not 0.0 < layer.keep_prob < 1.0:
            out.append(f"layer {i}: keep_prob {layer.keep_prob} outside (0, 1)")
    elif isinstance(layer, Embedding):
        if not rng_ok(layer.output_dim, bounds.embedding_dim_range):
            out.append(f"layer {i}: output_dim {layer.output_dim} out of "
                       f"{list(bounds.embedding_dim_range)}")


def validate(chromosome: Chromosome,
             modality: TaskModality,
             num_classes: int,
             bounds: LayerBounds = LayerBounds()) -> ValidityReport:
    """Check a chromosome against a task modality.

    Collects every violation rather than stopping at the first: modality
    compatibility, layer ordering, first/last layer constraints, shape
    feasibility (no extent may drop below 1), hyperparameter bounds, and
    the layer-count cap. An empty violation list means the chromosome is
    trainable as-is.
    """
    v: list[str] = []
    layers = chromosome.layers

    if len(layers) < 1:
        return ValidityReport(("no layers",))

    lr_lo, lr_hi = bounds.learning_rate_range
    if not lr_lo <= chromosome.learning_rate <= lr_hi:
        v.append(f"learning_rate {chromosome.learning_rate} out of [{lr_lo}, {lr_hi}]")

    if len(layers) > bounds.max_size + 1:
        v.append(f"{len(layers)} layers exceeds max size {bounds.max_size} + terminal")

    # terminal layer
    last = layers[-1]
    if not isinstance(last, Dense):
        v.append("last layer must be dense")
    else:
        if last.units != num_classes:
            v.append(f"terminal units {last.units} != num_classes {num_classes}")
        if last.activation not in TERMINAL_ACTIVATIONS:
            v.append(f"terminal activation {last.activation.value} not in "
                     f"{{linear, sigmoid, softmax}}")

    # first layer
    if isinstance(layers[0], Dropout):
        v.append("first layer may not be dropout")
    if isinstance(modality, SequenceTask) and not isinstance(layers[0], Embedding):
        v.append("sequence input requires an embedding layer at position 0")

    seen_dense = False
    for i, layer in enumerate(layers):
        if isinstance(modality, SequenceTask) and isinstance(layer, (Conv2D, MaxPool2D)):
            v.append(f"layer {i}: 2D layer on sequence modality")
        if isinstance(modality, ImageTask) and isinstance(layer, Embedding):
            v.append(f"layer {i}: embedding on image modality")
        if isinstance(layer, Embedding) and i > 0:
            v.append(f"layer {i}: embedding only allowed at position 0")
        if seen_dense and isinstance(layer, (Conv1D, Conv2D, MaxPool1D, MaxPool2D)):
            v.append(f"layer {i}: convolution/pooling after a dense layer")
        if isinstance(layer, Dense):
            seen_dense = True
        interior_dense = isinstance(layer, Dense) and i < len(layers) - 1
        if interior_dense:
            lo, hi = bounds.dense_units_range
            if not lo <= layer.units <= hi:
                v.append(f"layer {i}: units {layer.units} out of [{lo}, {hi}]")
            if layer.activation not in DENSE_ACTIVATIONS:
                v.append(f"layer {i}: activation {layer.activation.value} illegal for dense")
        _check_bounds(i, layer, bounds, v)

    # shape propagation; skip gracefully once a layer is inapplicable
    shape: Shape = modality.input_shape()
    for i, layer in enumerate(layers):
        try:
            shape = infer_shape(layer, shape)
        except LayerNotApplicableError as exc:
            v.append(f"layer {i}: {exc}")
            break
        if _min_extent(shape) < 1:
            v.append(f"layer {i}: spatial extent < 1 after pooling")
            break

    return ValidityReport(tuple(v))


# ── parameter counting ───────────────────────────────────────────────────────

def count_parameters(chromosome: Chromosome,
                     modality: TaskModality,
                     num_classes: int,
                     bounds: LayerBounds = LayerBounds()) -> int:
    """Count trainable weights without instantiating or training anything.

    Convolutions contribute (kernel-volume * in_channels + 1) * filters,
    dense layers (in_features + 1) * units, embeddings vocab_size *
    output_dim, and a prelu activation adds one learned slope per output
    channel. Pooling and dropout contribute nothing.
    """
    report = validate(chromosome, modality, num_classes, bounds)
    if not report.ok:
        raise InvalidChromosomeError("; ".join(report.violations))

    total = 0
    shape: Shape = modality.input_shape()
    for layer in chromosome.layers:
        if isinstance(layer, Conv2D):
            assert isinstance(shape, GridShape)
            total += (layer.kernel * layer.kernel * shape.channels + 1) * layer.filters
            if layer.activation is Activation.PRELU:
                total += layer.filters
        elif isinstance(layer, Conv1D):
            assert isinstance(shape, SeqShape)
            total += (layer.kernel * shape.channels + 1) * layer.filters
            if layer.activation is Activation.PRELU:
                total += layer.filters
        elif isinstance(layer, Dense):
            total += (flat_size(shape) + 1) * layer.units
            if layer.activation is Activation.PRELU:  # unreachable for legal genes
                total += layer.units
        elif isinstance(layer, Embedding):
            assert isinstance(modality, SequenceTask)
            total += modality.vocab_size * layer.output_dim
        shape = infer_shape(layer, shape)
    return total


# ── serialization ────────────────────────────────────────────────────────────

def _layer_to_doc(layer: Layer) -> dict:
    if isinstance(layer, (Conv1D, Conv2D)):
        return {"type": _LAYER_TYPE_NAMES[type(layer)], "filters": layer.filters,
                "kernel": layer.kernel, "activation": layer.activation.value}
    if isinstance(layer, (MaxPool1D, MaxPool2D)):
        return {"type": _LAYER_TYPE_NAMES[type(layer)], "kernel": layer.kernel}
    if isinstance(layer, Dense):
        return {"type": "dense", "units": layer.units, "activation": layer.activation.value}
    if isinstance(layer, Dropout):
        return {"type": "dropout", "keep_prob": layer.keep_prob}
    return {"type": "embedding", "output_dim": layer.output_dim}


def serialize(chromosome: Chromosome) -> str:
    """Render a chromosome as a JSON document (see README for the schema)."""
    doc: dict = {
        "learning_rate": chromosome.learning_rate,
        "layers": [_layer_to_doc(layer) for layer in chromosome.layers],
    }
    if chromosome.fitness is not None:
        f = chromosome.fitness
        doc["fitness"] = {"val_error": f.val_error, "n_params": f.n_params,
                          "score": f.score, "alpha": f.alpha,
                          "epochs_used": f.epochs_used}
    return json.dumps(doc, indent=2)


def _require(doc: dict, key: str, kinds, where: str):
    if key not in doc:
        raise ChromosomeSchemaError(f"{where}: missing field '{key}'")
    value = doc[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise ChromosomeSchemaError(f"{where}: field '{key}' has wrong type")
    return value


def _check_int_range(value, lo_hi, key: str, where: str) -> int:
    if value != int(value):
        raise ChromosomeSchemaError(f"{where}: field '{key}' must be an integer")
    value = int(value)
    lo, hi = lo_hi
    if not lo <= value <= hi:
        raise ChromosomeSchemaError(f"{where}: {key} out of [{lo},{hi}]")
    return value


def _activation_from_doc(doc: dict, legal, where: str) -> Activation:
    raw = _require(doc, "activation", str, where)
    try:
        act = Activation(raw)
    except ValueError:
        raise ChromosomeSchemaError(f"{where}: unknown activation '{raw}'") from None
    if act not in legal:
        raise ChromosomeSchemaError(f"{where}: activation '{raw}' illegal for this layer type")
    return act


def _layer_from_doc(doc: dict, index: int, bounds: LayerBounds) -> Layer:
    where = f"layers[{index}]"
    if not isinstance(doc, dict):
        raise ChromosomeSchemaError(f"{where}: expected an object")
    kind = _require(doc, "type", str, where)

    known = {"conv1d": ("filters", "kernel", "activation"),
             "conv2d": ("filters", "kernel", "activation"),
             "maxpool1d": ("kernel",), "maxpool2d": ("kernel",),
             "dense": ("units", "activation"), "dropout": ("keep_prob",),
             "embedding": ("output_dim",)}
    if kind not in known:
        raise ChromosomeSchemaError(f"{where}: unknown layer type '{kind}'")
    extra = set(doc) - set(known[kind]) - {"type"}
    if extra:
        raise ChromosomeSchemaError(f"{where}: unknown field '{sorted(extra)[0]}'")

    if kind in ("conv1d", "conv2d"):
        filters = _check_int_range(_require(doc, "filters", (int, float), where),
                                   bounds.filter_range, "filters", where)
        kernel = _check_int_range(_require(doc, "kernel", (int, float), where),
                                  bounds.conv_kernel_range, "kernel", where)
        act = _activation_from_doc(doc, CONV_ACTIVATIONS, where)
        return (Conv1D if kind == "conv1d" else Conv2D)(filters, kernel, act)
    if kind in ("maxpool1d", "maxpool2d"):
        kernel = _check_int_range(_require(doc, "kernel", (int, float), where),
                                  bounds.pool_kernel_range, "kernel", where)
        return (MaxPool1D if kind == "maxpool1d" else MaxPool2D)(kernel)
    if kind == "dense":
        units = _require(doc, "units", (int, float), where)
        if units != int(units) or int(units) < 1:
            raise ChromosomeSchemaError(f"{where}: units must be a positive integer")
        # terminal dense units equal the class count, so range-checking
        # against dense_units_range must wait for modality-aware validate()
        act = _activation_from_doc(doc, DENSE_ACTIVATIONS, where)
        return Dense(int(units), act)
    if kind == "dropout":
        keep = _require(doc, "keep_prob", (int, float), where)
        if not 0.0 < float(keep) < 1.0:
            raise ChromosomeSchemaError(f"{where}: keep_prob out of (0,1)")
        return Dropout(float(keep))
    dim = _check_int_range(_require(doc, "output_dim", (int, float), where),
                           bounds.embedding_dim_range, "output_dim", where)
    return Embedding(dim)


def deserialize(text: str, bounds: LayerBounds = LayerBounds()) -> Chromosome:
    """Parse a chromosome document, enforcing field names and bounds.

    Raises ChromosomeParseError (with position) for malformed text and
    ChromosomeSchemaError naming the offending field for schema problems.
    A top-level ``test_accuracy`` field, written by the run command next
    to the evolved result, is tolerated and ignored.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChromosomeParseError(
            f"malformed chromosome document at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise ChromosomeSchemaError("top level: expected an object")

    extra = set(doc) - {"learning_rate", "layers", "fitness", "test_accuracy"}
    if extra:
        raise ChromosomeSchemaError(f"top level: unknown field '{sorted(extra)[0]}'")

    lr = float(_require(doc, "learning_rate", (int, float), "top level"))
    lo, hi = bounds.learning_rate_range
    if not lo <= lr <= hi:
        raise ChromosomeSchemaError(f"top level: learning_rate out of [{lo},{hi}]")

    raw_layers = _require(doc, "layers", list, "top level")
    if not raw_layers:
        raise ChromosomeSchemaError("top level: 'layers' must not be empty")
    layers = tuple(_layer_from_doc(d, i, bounds) for i, d in enumerate(raw_layers))

    fitness = None
    if "fitness" in doc:
        fdoc = doc["fitness"]
        if not isinstance(fdoc, dict):
            raise ChromosomeSchemaError("fitness: expected an object")
        extra = set(fdoc) - {"val_error", "n_params", "score", "alpha", "epochs_used"}
        if extra:
            raise ChromosomeSchemaError(f"fitness: unknown field '{sorted(extra)[0]}'")
        val_error = float(_require(fdoc, "val_error", (int, float), "fitness"))
        if not 0.0 <= val_error <= 1.0:
            raise ChromosomeSchemaError("fitness: val_error out of [0,1]")
        n_params = _require(fdoc, "n_params", (int, float), "fitness")
        if n_params != int(n_params) or int(n_params) < 1:
            raise ChromosomeSchemaError("fitness: n_params must be a positive integer")
        score = float(_require(fdoc, "score", (int, float), "fitness"))
        alpha = float(fdoc.get("alpha", 1.0))
        epochs_used = int(fdoc.get("epochs_used", 0))
        fitness = FitnessRecord(val_error, int(n_params), score, alpha, epochs_used)

    return Chromosome(lr, layers, fitness)
