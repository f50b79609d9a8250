"""Synthetic embedding tasks with a known ground truth.

Each class is a direction on the unit sphere; examples are the direction plus
Gaussian noise (sigma), re-normalized. Base prototypes are the same
directions corrupted by independent noise (delta), so delta directly controls
how wrong the zero-shot classifier is and sigma how spread out each class is.
A matching test set uses fresh noise, sized at 25% of the train set per
class.

Noise entries are drawn with variance sigma^2 / sqrt(d). The two obvious
conventions are both useless as oracles: per-entry unit variance makes the
noise norm grow as sqrt(d) and drowns the unit class direction (near-chance
accuracy at d=32), while unit expected norm makes every task trivially
separable. The intermediate scaling keeps moderate class overlap at the
default dimension, so a zero-shot classifier is clearly better than chance
yet leaves real headroom for refinement to close.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClassSpace, EmbeddingSet, Task, make_trzsl_split, unit_normalize

TEST_FRACTION = 0.25


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape and noise parameters of one synthetic task."""

    C: int = 10
    d: int = 32
    labeled_per_class: int = 2
    unlabeled_per_class: int = 100
    sigma: float = 0.6
    delta: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C < 2:
            raise ValueError("need at least 2 classes")
        if self.d < 2:
            raise ValueError("need at least 2 dimensions")
        if self.labeled_per_class < 0 or self.unlabeled_per_class < 0:
            raise ValueError("per-class counts must be non-negative")
        if self.labeled_per_class + self.unlabeled_per_class < 1:
            raise ValueError("each class needs at least one train example")
        if self.sigma < 0 or self.delta < 0:
            raise ValueError("noise scales must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "d": self.d,
            "labeled_per_class": self.labeled_per_class,
            "unlabeled_per_class": self.unlabeled_per_class,
            "sigma": self.sigma,
            "delta": self.delta,
            "seed": self.seed,
        }


def _noise_scale(scale: float, d: int) -> float:
    """Per-entry standard deviation giving noise variance scale^2 / sqrt(d)."""
    return scale / d**0.25


def _cluster(rng: np.random.Generator, mu: np.ndarray, per_class: int, sigma: float) -> np.ndarray:
    """(C, per_class, d) noisy unit vectors around each class direction."""
    C, d = mu.shape
    noise = rng.standard_normal((C, per_class, d))
    return unit_normalize(mu[:, None, :] + _noise_scale(sigma, d) * noise)


def synth_generate(spec: SyntheticSpec) -> Task:
    """Deterministically generate (train, test, class space) for a spec.

    The train set carries the true label of every row (paradigm wiring
    decides what training is allowed to see). Test size per class is 25% of
    the train size, rounded half-up, at least 1. The class space ships with a
    canonical seen/unseen partition derived from the same seed so the
    transductive paradigm works out of the box.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    mu = unit_normalize(rng.standard_normal((spec.C, spec.d)))
    prototypes = unit_normalize(
        mu + _noise_scale(spec.delta, spec.d) * rng.standard_normal((spec.C, spec.d))
    )

    train_pc = spec.labeled_per_class + spec.unlabeled_per_class
    test_pc = max(1, int(np.floor(TEST_FRACTION * train_pc + 0.5)))

    train_feats = _cluster(rng, mu, train_pc, spec.sigma).reshape(spec.C * train_pc, spec.d)
    test_feats = _cluster(rng, mu, test_pc, spec.sigma).reshape(spec.C * test_pc, spec.d)

    train_labels = np.repeat(np.arange(spec.C, dtype=np.int64), train_pc)
    test_labels = np.repeat(np.arange(spec.C, dtype=np.int64), test_pc)
    n_train = train_labels.size
    train = EmbeddingSet(train_feats, train_labels, np.arange(n_train, dtype=np.uint64))
    test = EmbeddingSet(
        test_feats, test_labels, np.arange(n_train, n_train + test_labels.size, dtype=np.uint64)
    )
    names = tuple(f"class_{c:03d}" for c in range(spec.C))
    space = ClassSpace(names, prototypes, partition=make_trzsl_split(spec.C, spec.seed))
    return Task(train=train, test=test, space=space)
