"""Dataset loading, text encoding, splits, and synthetic generators.

File formats (byte-level examples in the README):

* image CSV: one sample per line, ``label,p1,...,pN`` with pixels in
  row-major (height, width, channel) order, scaled to [0, 1] on load;
* text corpus: one sample per line, ``label<TAB>text``, UTF-8.

Text is tokenized by lowercasing and splitting on non-alphanumeric runs.
The vocabulary keeps the most frequent training tokens (ties broken
lexicographically) at indices 1..V; index 0 is reserved for padding and
out-of-vocabulary tokens, so sequence modalities carry vocab_size = V + 1.
"""

from __future__ import annotations

import re
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .genome import ImageTask, SequenceTask, TaskModality

_TOKEN_RE = re.compile(r"[a-z0-9]+")


# ── containers ───────────────────────────────────────────────────────────────

@dataclass
class SplitData:
    """One partition: feature tensor plus one-hot labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on sample count")


@dataclass
class Dataset:
    modality: TaskModality
    train: SplitData
    validation: SplitData
    test: SplitData
    num_classes: int
    class_names: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class Vocabulary:
    """Frequency-ranked word -> index map; indices run densely from 1."""

    word_to_index: dict

    @property
    def size(self) -> int:
        return len(self.word_to_index)

    def index(self, word: str) -> int:
        return self.word_to_index.get(word, 0)


def one_hot(labels: Sequence[int], num_classes: int) -> np.ndarray:
    out = np.zeros((len(labels), num_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


# ── text pipeline ────────────────────────────────────────────────────────────

def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def build_vocabulary(training_texts: Sequence[str], size: int = 1000) -> Vocabulary:
    """Top-``size`` most frequent training tokens, ties lexicographic.

    Built from training text only; feeding validation or test text in here
    would leak vocabulary across the split.
    """
    counts = Counter()
    for text in training_texts:
        counts.update(tokenize(text))
    if not counts:
        raise ValueError("corpus has no tokens")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:size]
    return Vocabulary({word: i + 1 for i, (word, _) in enumerate(ranked)})


def encode_text(text: str, vocab: Vocabulary, max_length: int) -> np.ndarray:
    """Token indices, truncated or right-padded with 0 to ``max_length``."""
    indices = [vocab.index(tok) for tok in tokenize(text)[:max_length]]
    out = np.zeros(max_length, dtype=np.int64)
    out[:len(indices)] = indices
    return out


def load_text_corpus(path) -> tuple[list[str], list[int]]:
    """Read ``label<TAB>text`` lines."""
    texts, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'label<TAB>text'")
            try:
                labels.append(int(parts[0]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: label '{parts[0]}' is not an integer") from None
            texts.append(parts[1])
    return texts, labels


def write_text_corpus(path, texts: Sequence[str], labels: Sequence[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for label, text in zip(labels, texts):
            fh.write(f"{label}\t{text}\n")


def build_text_dataset(train: tuple[list[str], list[int]],
                       validation: tuple[list[str], list[int]],
                       test: tuple[list[str], list[int]],
                       vocab_size: int = 1000,
                       max_length: int = 100,
                       num_classes: Optional[int] = None) -> Dataset:
    """Encode three raw text partitions into a sequence Dataset.

    The vocabulary comes from the training texts alone.
    """
    vocab = build_vocabulary(train[0], vocab_size)
    if num_classes is None:
        num_classes = max(max(p[1]) for p in (train, validation, test) if p[1]) + 1

    def encode_split(texts, labels):
        feats = np.stack([encode_text(t, vocab, max_length) for t in texts])
        return SplitData(feats, one_hot(labels, num_classes))

    modality = SequenceTask(max_length=max_length, vocab_size=vocab.size + 1)
    return Dataset(modality, encode_split(*train), encode_split(*validation),
                   encode_split(*test), num_classes)


# ── image CSV ────────────────────────────────────────────────────────────────

def load_image_csv(path, height: int, width: int, channels: int,
                   num_classes: int, pixel_scale: float = 255.0) -> SplitData:
    """Parse ``label,p1,...,pN`` rows into scaled image features."""
    expected = height * width * channels
    rows, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != expected + 1:
                raise ValueError(
                    f"{path}:{lineno}: expected {expected + 1} columns, got {len(fields)}")
            try:
                label = int(fields[0])
                pixels = [float(v) for v in fields[1:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
            if not 0 <= label < num_classes:
                raise ValueError(
                    f"{path}:{lineno}: label {label} out of range [0, {num_classes})")
            labels.append(label)
            rows.append(pixels)
    features = np.array(rows).reshape(len(rows), height, width, channels) / pixel_scale
    return SplitData(features, one_hot(labels, num_classes))


def write_image_csv(path, split: SplitData, pixel_scale: float = 255.0) -> None:
    """Inverse of load_image_csv; pixels are quantized to integer steps."""
    labels = np.argmax(split.labels, axis=1)
    flat = split.features.reshape(split.features.shape[0], -1)
    with open(path, "w", encoding="utf-8") as fh:
        for label, row in zip(labels, flat):
            pixels = np.rint(row * pixel_scale).astype(np.int64)
            fh.write(str(int(label)) + "," + ",".join(map(str, pixels)) + "\n")


# ── splitting ────────────────────────────────────────────────────────────────

def split(partition: SplitData, validation_fraction: float,
          rng: np.random.Generator) -> tuple[SplitData, SplitData]:
    """Seeded, class-stratified train/validation split.

    Every class contributes round(n_class * fraction) validation samples,
    clamped so both sides keep at least one sample per class when possible;
    single-sample classes go to the training side with a warning.
    """
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError("validation_fraction must lie strictly between 0 and 1")
    labels = np.argmax(partition.labels, axis=1)
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(len(members))]
        if len(members) == 1:
            warnings.warn(f"class {cls} has a single sample; keeping it in train")
            train_idx.extend(members)
            continue
        n_val = int(round(len(members) * validation_fraction))
        n_val = min(max(n_val, 1), len(members) - 1)
        val_idx.extend(members[:n_val])
        train_idx.extend(members[n_val:])
    train_idx = np.sort(np.array(train_idx, dtype=np.int64))
    val_idx = np.sort(np.array(val_idx, dtype=np.int64))
    return (SplitData(partition.features[train_idx], partition.labels[train_idx]),
            SplitData(partition.features[val_idx], partition.labels[val_idx]))


# ── synthetic image task ─────────────────────────────────────────────────────

def image_class_templates(classes: int, grid: tuple[int, int]) -> np.ndarray:
    """One oriented-bar pattern per class on a (height, width) grid."""
    height, width = grid
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    thickness = max(1.0, min(height, width) / 6.0)
    templates = np.zeros((classes, height, width))
    ys, xs = np.mgrid[0:height, 0:width]
    for cls in range(classes):
        angle = np.pi * cls / classes
        # perpendicular distance from the bar's center line
        dist = np.abs(-(xs - cx) * np.sin(angle) + (ys - cy) * np.cos(angle))
        templates[cls] = (dist <= thickness / 2.0 + 0.5).astype(float)
    return templates


def nearest_template_predict(features: np.ndarray, templates: np.ndarray) -> np.ndarray:
    """Classify by smallest squared distance to a class template."""
    flat = features.reshape(features.shape[0], -1)
    tflat = templates.reshape(templates.shape[0], -1)
    d2 = ((flat[:, None, :] - tflat[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _round_robin_labels(n: int, classes: int) -> np.ndarray:
    return np.arange(n, dtype=np.int64) % classes


def synth_image_dataset(n_train: int, n_validation: int, n_test: int,
                        classes: int = 3, grid: tuple[int, int] = (8, 8),
                        noise_std: float = 0.3, seed: int = 0) -> Dataset:
    """Deterministic template-plus-noise image classification task.

    Each sample is its class template (oriented bar) plus Gaussian pixel
    noise, clipped back to [0, 1]. With zero noise a nearest-template
    classifier is perfect, which pins the accuracy ceiling for tests.
    Labels cycle round-robin so partitions stay balanced.
    """
    if classes < 2:
        raise ValueError("need at least 2 classes")
    height, width = grid
    templates = image_class_templates(classes, grid)
    rng = np.random.default_rng(seed)

    def make(n: int) -> SplitData:
        labels = _round_robin_labels(n, classes)
        feats = templates[labels] + rng.normal(0.0, noise_std, (n, height, width))
        feats = np.clip(feats, 0.0, 1.0).reshape(n, height, width, 1)
        return SplitData(feats, one_hot(labels, classes))

    return Dataset(ImageTask(height, width, 1), make(n_train), make(n_validation),
                   make(n_test), classes)


# ── synthetic sentiment task ─────────────────────────────────────────────────

POSITIVE_KEYWORDS = ("superb", "excellent", "wonderful", "delightful",
                     "masterful", "uplifting")
NEGATIVE_KEYWORDS = ("dreadful", "awful", "terrible", "boring",
                     "miserable", "disastrous")

_SYLLABLES = ("ba", "re", "mo", "ta", "li", "no", "ke", "su", "da", "vi")


def _background_words(count: int) -> list[str]:
    words = []
    i = 0
    while len(words) < count:
        word = _SYLLABLES[i % 10] + _SYLLABLES[(i // 10) % 10] + _SYLLABLES[(i // 100) % 10]
        if word not in POSITIVE_KEYWORDS and word not in NEGATIVE_KEYWORDS:
            words.append(word)
        i += 1
    return words


def synth_sentiment_corpus(n: int, vocab_words: int = 200, seed: int = 0,
                           label_noise: float = 0.0,
                           min_len: int = 10, max_len: int = 30
                           ) -> tuple[list[str], list[int]]:
    """Background-word sentences with class keywords injected.

    Sentence i belongs to class i % 2 (0 negative, 1 positive) and gets
    1-3 keywords of that class at random positions. With ``label_noise``
    the recorded label flips with that probability while the text keeps
    its true class, so a keyword-reading oracle scores 1 - label_noise.
    """
    rng = np.random.default_rng(seed)
    pool = _background_words(vocab_words)
    texts, labels = [], []
    for i in range(n):
        cls = i % 2
        keywords = POSITIVE_KEYWORDS if cls == 1 else NEGATIVE_KEYWORDS
        length = int(rng.integers(min_len, max_len + 1))
        words = [pool[int(rng.integers(len(pool)))] for _ in range(length)]
        n_marks = int(rng.integers(1, 4))
        positions = rng.choice(length, size=min(n_marks, length), replace=False)
        for pos in positions:
            words[int(pos)] = keywords[int(rng.integers(len(keywords)))]
        label = cls
        if label_noise > 0.0 and rng.random() < label_noise:
            label = 1 - cls
        texts.append(" ".join(words))
        labels.append(label)
    return texts, labels


def keyword_oracle_predict(texts: Sequence[str]) -> np.ndarray:
    """Classify by which keyword set appears more often."""
    out = np.zeros(len(texts), dtype=np.int64)
    for i, text in enumerate(texts):
        tokens = tokenize(text)
        pos = sum(tok in POSITIVE_KEYWORDS for tok in tokens)
        neg = sum(tok in NEGATIVE_KEYWORDS for tok in tokens)
        out[i] = 1 if pos > neg else 0
    return out


def synth_sentiment_dataset(n_train: int, n_validation: int, n_test: int,
                            vocab_words: int = 200, seed: int = 0,
                            max_length: int = 30, label_noise: float = 0.0,
                            vocab_size: int = 1000) -> Dataset:
    """Two-class synthetic sentiment task, balanced and fully seeded."""
    train = synth_sentiment_corpus(n_train, vocab_words, seed, label_noise)
    validation = synth_sentiment_corpus(n_validation, vocab_words, seed + 1, label_noise)
    test = synth_sentiment_corpus(n_test, vocab_words, seed + 2, label_noise)
    ds = build_text_dataset(train, validation, test, vocab_size=vocab_size,
                            max_length=max_length, num_classes=2)
    ds.class_names = ("negative", "positive")
    return ds
