"""evonet: a desk-scale neuro-evolution framework.

Evolves the architecture and hyperparameters of small convolutional and
fully-connected networks with a generational genetic algorithm: tournament
selection, layer-level mutation applied twice per parent, and a fitness
that combines validation error with a complexity penalty. Ships with its
own numpy training backend and a deterministic surrogate evaluator.
"""

from .data import (
    Dataset,
    SplitData,
    Vocabulary,
    build_vocabulary,
    encode_text,
    load_image_csv,
    load_text_corpus,
    split,
    synth_image_dataset,
    synth_sentiment_dataset,
)
from .evolution import (
    EvolutionConfig,
    EvolutionResult,
    GenerationStats,
    init_population,
    mutate,
    produce_offspring,
    run_evolution,
    summarize_generation,
    tournament_select,
)
from .fitness import FitnessRecord, evaluate, fitness_score
from .genome import (
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
    count_parameters,
    deserialize,
    infer_shape,
    random_chromosome,
    random_layer,
    serialize,
    validate,
)
from .nn import (
    MicroNNEvaluator,
    SurrogateEvaluator,
    TrainingHyper,
    build_network,
    train_and_validate,
)

__version__ = "0.1.0"

__all__ = [
    "Activation", "Chromosome", "Conv1D", "Conv2D", "Dense", "Dropout",
    "Embedding", "ImageTask", "LayerBounds", "MaxPool1D", "MaxPool2D",
    "SequenceTask", "count_parameters", "deserialize", "infer_shape",
    "random_chromosome", "random_layer", "serialize", "validate",
    "FitnessRecord", "evaluate", "fitness_score",
    "EvolutionConfig", "EvolutionResult", "GenerationStats", "init_population",
    "mutate", "produce_offspring", "run_evolution", "summarize_generation",
    "tournament_select",
    "Dataset", "SplitData", "Vocabulary", "build_vocabulary", "encode_text",
    "load_image_csv", "load_text_corpus", "split", "synth_image_dataset",
    "synth_sentiment_dataset",
    "MicroNNEvaluator", "SurrogateEvaluator", "TrainingHyper", "build_network",
    "train_and_validate",
]
