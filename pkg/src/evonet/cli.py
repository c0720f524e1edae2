"""Command-line entry point.

Subcommands:

* ``run --config <path> [--seed N] [--out DIR]`` - evolve on the configured
  dataset, streaming one log line per generation and writing stats.csv,
  run_log.jsonl, best_chromosome.json, and the two figures.
* ``report --chromosome <path> --dataset <config>`` - retrain a saved
  chromosome at the final epoch budget and print its test accuracy.
* ``synth --kind image|sentiment --out <dir>`` - emit a synthetic dataset
  in the documented file formats.

The config file is flat ``key = value`` text; ``#`` starts a comment.
Unknown keys are rejected by name. Relative paths inside a config are
resolved against the config file's directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import data as D
from .evolution import EvolutionConfig, GenerationStats, run_evolution, slot_rng
from .genome import Chromosome, LayerBounds, deserialize, serialize, validate
from .nn import MicroNNEvaluator, NonFiniteLossError, SurrogateEvaluator, TrainingHyper
from .nn.surrogate import surrogate_outcome
from .nn.training import test_accuracy as _test_accuracy
from .plots import save_fitness_figure, save_learning_rate_figure

STATS_COLUMNS = ("generation", "fitness_mean", "fitness_p5", "fitness_p95",
                 "lr_mean", "lr_p5", "lr_p95")


class ConfigError(ValueError):
    pass


# ── config schema ────────────────────────────────────────────────────────────

def _boolish(raw: str) -> bool:
    if raw.lower() in ("true", "yes", "1"):
        return True
    if raw.lower() in ("false", "no", "0"):
        return False
    raise ValueError(raw)


# key -> (caster, default); None default means "unset"
_SCHEMA = {
    # genetic algorithm
    "population_size": (int, 100),
    "generation_max": (int, 10),
    "epochs_start": (int, 3),
    "tournament_size": (int, 7),
    "population_decrement": (int, 10),
    "population_floor": (int, 10),
    "max_size": (int, 7),
    "alpha": (float, 1.0),
    "seed": (int, None),
    # layer bounds
    "filters_min": (int, 10), "filters_max": (int, 100),
    "conv_kernel_min": (int, 1), "conv_kernel_max": (int, 6),
    "pool_kernel_min": (int, 1), "pool_kernel_max": (int, 6),
    "dense_units_min": (int, 10), "dense_units_max": (int, 100),
    "embedding_dim_min": (int, 100), "embedding_dim_max": (int, 300),
    "learning_rate_min": (float, 1e-4), "learning_rate_max": (float, 1e-1),
    # training
    "batch_size": (int, 1024),
    "weight_init_mean": (float, 0.00),
    "weight_init_std": (float, 0.01),
    "adam_beta1": (float, 0.9),
    "adam_beta2": (float, 0.999),
    "adam_epsilon": (float, 1e-8),
    "prob_clamp": (float, 1e-7),
    # run plumbing
    "evaluator": (str, "micro_nn"),
    "out_dir": (str, "run_output"),
    # dataset descriptor
    "dataset": (str, None),
    "classes": (int, 3),
    "grid_height": (int, 8), "grid_width": (int, 8),
    "noise_std": (float, 0.3),
    "n_train": (int, 1000), "n_validation": (int, 200), "n_test": (int, 200),
    "data_seed": (int, None),
    "vocab_words": (int, 200),
    "label_noise": (float, 0.0),
    "vocab_size": (int, 1000),
    "max_length": (int, None),
    "train_path": (str, None), "validation_path": (str, None), "test_path": (str, None),
    "height": (int, None), "width": (int, None), "channels": (int, 1),
    "num_classes": (int, None),
    "pixel_scale": (float, 255.0),
    "validation_fraction": (float, 0.1),
}

_DATASET_KINDS = ("synth_image", "synth_sentiment", "image_csv", "text_corpus")


@dataclass
class RunConfig:
    evolution: EvolutionConfig
    hyper: TrainingHyper
    evaluator: str
    out_dir: Path
    values: dict = field(default_factory=dict)  # resolved dataset keys
    base_dir: Path = Path(".")

    @property
    def seed(self) -> int:
        return self.evolution.seed

    def final_epochs(self) -> int:
        return self.evolution.epochs_at(self.evolution.generation_max)


def _parse_lines(text: str, source: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, raw_value = line.partition("=")
        key, raw_value = key.strip(), raw_value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        caster, _ = _SCHEMA[key]
        try:
            values[key] = caster(raw_value)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: key '{key}' expects {caster.__name__}, "
                f"got '{raw_value}'") from None
    return values


def parse_config(path,
                 seed_override: Optional[int] = None,
                 out_override: Optional[str] = None) -> RunConfig:
    """Parse a flat key-value config file into a validated RunConfig."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    values = _parse_lines(text, str(path))

    def get(key):
        if key in values:
            return values[key]
        return _SCHEMA[key][1]

    seed = seed_override if seed_override is not None else get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")

    bounds = LayerBounds(
        filter_range=(get("filters_min"), get("filters_max")),
        conv_kernel_range=(get("conv_kernel_min"), get("conv_kernel_max")),
        pool_kernel_range=(get("pool_kernel_min"), get("pool_kernel_max")),
        dense_units_range=(get("dense_units_min"), get("dense_units_max")),
        embedding_dim_range=(get("embedding_dim_min"), get("embedding_dim_max")),
        learning_rate_range=(get("learning_rate_min"), get("learning_rate_max")),
        max_size=get("max_size"),
    )
    try:
        evolution = EvolutionConfig(
            population_size=get("population_size"),
            generation_max=get("generation_max"),
            epochs_start=get("epochs_start"),
            tournament_size=get("tournament_size"),
            population_decrement=get("population_decrement"),
            population_floor=get("population_floor"),
            max_size=get("max_size"),
            alpha=get("alpha"),
            seed=seed,
            bounds=bounds,
        )
        hyper = TrainingHyper(
            batch_size=get("batch_size"),
            weight_init_mean=get("weight_init_mean"),
            weight_init_std=get("weight_init_std"),
            adam_beta1=get("adam_beta1"),
            adam_beta2=get("adam_beta2"),
            adam_epsilon=get("adam_epsilon"),
            prob_clamp=get("prob_clamp"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    evaluator = get("evaluator")
    if evaluator not in ("micro_nn", "surrogate"):
        raise ConfigError(f"evaluator must be micro_nn or surrogate, got '{evaluator}'")

    kind = get("dataset")
    if kind is None:
        raise ConfigError("missing dataset: set the 'dataset' key "
                          f"(one of {', '.join(_DATASET_KINDS)})")
    if kind not in _DATASET_KINDS:
        raise ConfigError(f"unknown dataset kind '{kind}'")

    base_dir = path.parent
    resolved = {key: get(key) for key in _SCHEMA}
    resolved["dataset"] = kind
    resolved["seed"] = seed
    if kind in ("image_csv", "text_corpus"):
        for pkey in ("train_path", "test_path"):
            if resolved[pkey] is None:
                raise ConfigError(f"dataset '{kind}' requires '{pkey}'")
        for pkey in ("train_path", "validation_path", "test_path"):
            if resolved[pkey] is not None:
                full = (base_dir / resolved[pkey]).resolve()
                if not full.exists():
                    raise ConfigError(f"{pkey} does not exist: {full}")
                resolved[pkey] = full
    if kind == "image_csv":
        for rkey in ("height", "width", "num_classes"):
            if resolved[rkey] is None:
                raise ConfigError(f"dataset 'image_csv' requires '{rkey}'")

    out_dir = Path(out_override) if out_override is not None else Path(get("out_dir"))
    return RunConfig(evolution=evolution, hyper=hyper, evaluator=evaluator,
                     out_dir=out_dir, values=resolved, base_dir=base_dir)


# ── dataset construction ─────────────────────────────────────────────────────

def build_dataset(config: RunConfig) -> D.Dataset:
    v = config.values
    kind = v["dataset"]
    data_seed = v["data_seed"] if v["data_seed"] is not None else config.seed

    if kind == "synth_image":
        return D.synth_image_dataset(
            v["n_train"], v["n_validation"], v["n_test"], classes=v["classes"],
            grid=(v["grid_height"], v["grid_width"]), noise_std=v["noise_std"],
            seed=data_seed)
    if kind == "synth_sentiment":
        max_length = v["max_length"] if v["max_length"] is not None else 30
        return D.synth_sentiment_dataset(
            v["n_train"], v["n_validation"], v["n_test"],
            vocab_words=v["vocab_words"], seed=data_seed, max_length=max_length,
            label_noise=v["label_noise"], vocab_size=v["vocab_size"])
    if kind == "image_csv":
        h, w, c, ncls = v["height"], v["width"], v["channels"], v["num_classes"]
        train = D.load_image_csv(v["train_path"], h, w, c, ncls, v["pixel_scale"])
        test = D.load_image_csv(v["test_path"], h, w, c, ncls, v["pixel_scale"])
        if v["validation_path"] is not None:
            validation = D.load_image_csv(v["validation_path"], h, w, c, ncls,
                                          v["pixel_scale"])
        else:
            import numpy as np
            train, validation = D.split(train, v["validation_fraction"],
                                        np.random.default_rng(data_seed))
        from .genome import ImageTask
        return D.Dataset(ImageTask(h, w, c), train, validation, test, ncls)
    # text_corpus
    max_length = v["max_length"] if v["max_length"] is not None else 100
    train_texts, train_labels = D.load_text_corpus(v["train_path"])
    test = D.load_text_corpus(v["test_path"])
    if v["validation_path"] is not None:
        validation = D.load_text_corpus(v["validation_path"])
    else:
        import numpy as np
        rng = np.random.default_rng(data_seed)
        order = rng.permutation(len(train_texts))
        n_val = max(1, int(round(len(train_texts) * v["validation_fraction"])))
        val_idx, train_idx = order[:n_val], order[n_val:]
        validation = ([train_texts[i] for i in val_idx], [train_labels[i] for i in val_idx])
        train_texts = [train_texts[i] for i in train_idx]
        train_labels = [train_labels[i] for i in train_idx]
    return D.build_text_dataset((train_texts, train_labels), validation, test,
                                vocab_size=v["vocab_size"], max_length=max_length,
                                num_classes=v["num_classes"])


def make_evaluator(config: RunConfig):
    if config.evaluator == "surrogate":
        return SurrogateEvaluator(config.evolution.bounds)
    return MicroNNEvaluator(config.hyper, config.evolution.bounds)


# ── run ──────────────────────────────────────────────────────────────────────

def _csv_row(stats: GenerationStats) -> str:
    cells = [str(stats.generation)] + [repr(float(getattr(stats, col)))
                                       for col in STATS_COLUMNS[1:]]
    return ",".join(cells)


def final_test_accuracy(best: Chromosome, dataset, config: RunConfig) -> float:
    """Test accuracy of the winning chromosome, computed exactly once.

    The micro-NN backend retrains at the final epoch budget from a stream
    derived from the run seed; the surrogate reports its deterministic
    pseudo-accuracy since it never trains.
    """
    if config.evaluator == "surrogate":
        outcome = surrogate_outcome(best, dataset.modality, dataset.num_classes,
                                    config.evolution.bounds)
        return 1.0 - outcome.val_error
    rng = slot_rng(config.seed, config.evolution.generation_max + 1, 0)
    try:
        return _test_accuracy(best, dataset, config.final_epochs(), config.hyper,
                              rng, config.evolution.bounds)
    except NonFiniteLossError:
        return 0.0


def run(config: RunConfig) -> int:
    """Execute evolution and persist logs, stats, figures, and the winner."""
    dataset = build_dataset(config)
    evaluator = make_evaluator(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    stats_path = config.out_dir / "stats.csv"
    log_path = config.out_dir / "run_log.jsonl"

    with open(stats_path, "w", encoding="utf-8") as stats_fh, \
         open(log_path, "w", encoding="utf-8") as log_fh:
        stats_fh.write(",".join(STATS_COLUMNS) + "\n")
        stats_fh.flush()

        def observer(generation: int, stats: GenerationStats, best: Chromosome) -> None:
            stats_fh.write(_csv_row(stats) + "\n")
            stats_fh.flush()
            log_fh.write(json.dumps(asdict(stats)) + "\n")
            log_fh.flush()
            print(f"generation {generation:3d} | epochs {stats.epochs:3d} "
                  f"| population {stats.population_size:4d} "
                  f"| fitness mean {stats.fitness_mean:.4f} best {stats.fitness_best:.4f} "
                  f"| lr mean {stats.lr_mean:.2e}")

        result = run_evolution(config.evolution, dataset, evaluator, observer)

    acc = final_test_accuracy(result.best, dataset, config)
    doc = json.loads(serialize(result.best))
    doc["test_accuracy"] = acc
    best_path = config.out_dir / "best_chromosome.json"
    best_path.write_text(json.dumps(doc, indent=2), encoding="utf-8")

    save_fitness_figure(result.history, config.out_dir / "fitness.png")
    save_learning_rate_figure(result.history, config.out_dir / "learning_rate.png")

    print(f"best chromosome: {result.best.describe()}")
    print(f"test accuracy {acc:.4f} | parameters {result.best.fitness.n_params}")
    print(f"outputs written to {config.out_dir}")
    return 0


def report(chromosome_path, config: RunConfig) -> int:
    """Retrain a saved chromosome and print its test-set performance."""
    dataset = build_dataset(config)
    text = Path(chromosome_path).read_text(encoding="utf-8")
    chromosome = deserialize(text, config.evolution.bounds)
    check = validate(chromosome, dataset.modality, dataset.num_classes,
                     config.evolution.bounds)
    if not check.ok:
        raise ValueError("chromosome does not fit the dataset modality: "
                         + "; ".join(check.violations))
    acc = final_test_accuracy(chromosome, dataset, config)
    n_params = (chromosome.fitness.n_params if chromosome.fitness is not None else
                surrogate_outcome(chromosome, dataset.modality, dataset.num_classes,
                                  config.evolution.bounds).n_params)
    print(f"chromosome: {chromosome.describe()}")
    print(f"test accuracy {acc:.4f} | parameters {n_params}")
    return 0


def synth(kind: str, out_dir, seed: int, n_train: int, n_validation: int,
          n_test: int, noise_std: float, label_noise: float) -> int:
    """Write a synthetic dataset in the documented on-disk formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "image":
        ds = D.synth_image_dataset(n_train, n_validation, n_test,
                                   noise_std=noise_std, seed=seed)
        for name, part in (("train", ds.train), ("validation", ds.validation),
                           ("test", ds.test)):
            D.write_image_csv(out / f"{name}.csv", part)
    else:
        for name, n, offset in (("train", n_train, 0), ("validation", n_validation, 1),
                                ("test", n_test, 2)):
            texts, labels = D.synth_sentiment_corpus(n, seed=seed + offset,
                                                     label_noise=label_noise)
            D.write_text_corpus(out / f"{name}.tsv", texts, labels)
    print(f"dataset written to {out}")
    return 0


# ── argument parsing ─────────────────────────────────────────────────────────

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evonet",
        description="Evolve small neural network architectures with a genetic algorithm.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run evolution from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)

    p_rep = sub.add_parser("report", help="retrain a saved chromosome and print test accuracy")
    p_rep.add_argument("--chromosome", required=True)
    p_rep.add_argument("--dataset", required=True,
                       help="config file describing the dataset and run settings")

    p_syn = sub.add_parser("synth", help="emit a synthetic dataset")
    p_syn.add_argument("--kind", choices=("image", "sentiment"), required=True)
    p_syn.add_argument("--out", required=True)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--n-train", type=int, default=1000)
    p_syn.add_argument("--n-validation", type=int, default=200)
    p_syn.add_argument("--n-test", type=int, default=200)
    p_syn.add_argument("--noise-std", type=float, default=0.3)
    p_syn.add_argument("--label-noise", type=float, default=0.0)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return run(parse_config(args.config, args.seed, args.out))
        if args.command == "report":
            return report(args.chromosome, parse_config(args.dataset))
        return synth(args.kind, args.out, args.seed, args.n_train,
                     args.n_validation, args.n_test, args.noise_std,
                     args.label_noise)
    except Exception as exc:  # CLI boundary: fail with a diagnostic, not a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
