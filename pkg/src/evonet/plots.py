"""Render run statistics as figures next to the stats table."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_fitness_figure(history, path) -> None:
    """Mean fitness per generation with a 5th-95th percentile band."""
    generations = [s.generation for s in history]
    mean = [s.fitness_mean for s in history]
    lo = [s.fitness_p5 for s in history]
    hi = [s.fitness_p95 for s in history]
    best = [s.fitness_best for s in history]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.fill_between(generations, lo, hi, alpha=0.25, label="5th-95th percentile")
    ax.plot(generations, mean, marker="o", label="mean")
    ax.plot(generations, best, marker=".", linestyle="--", label="best")
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness (lower is better)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_learning_rate_figure(history, path) -> None:
    """Mean learning rate per generation with a 5th-95th percentile band."""
    generations = [s.generation for s in history]
    mean = [s.lr_mean for s in history]
    lo = [s.lr_p5 for s in history]
    hi = [s.lr_p95 for s in history]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.fill_between(generations, lo, hi, alpha=0.25, label="5th-95th percentile")
    ax.plot(generations, mean, marker="o", label="mean")
    ax.set_yscale("log")
    ax.set_xlabel("generation")
    ax.set_ylabel("learning rate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
