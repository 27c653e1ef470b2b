"""Deterministic synthetic UCR-style datasets for demos and desk-scale tests.

The generator mimics the smooth-subspace family of simulated archive
datasets: each class owns a contiguous window of time steps carrying a
smooth class-specific ramp, while steps outside the window are pure noise.
That makes specific time steps informative per class, which is the property
the interpretability tooling is meant to surface.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Dataset, serialize_ucr_tsv


def make_smooth_bands(
    n_per_class: int = 50,
    length: int = 15,
    classes: int = 3,
    noise: float = 0.3,
    seed: int = 0,
    name: str = "SmoothBands",
    level_span: float = 2.0,
    background: float = 1.5,
) -> Dataset:
    """Labeled series with one smooth informative band per class.

    Class c ramps between class-specific levels (spread over
    [-level_span, level_span]) inside its window of ``length // classes``
    steps, plus gaussian jitter of scale ``noise``; everything outside the
    window is uniform noise on [-background, background].  Raw values stay
    roughly within [-2, 2] like the archive originals of this family.
    """
    if classes < 2 or length < classes:
        raise ValueError("need >= 2 classes and length >= classes")
    rng = np.random.default_rng(seed)
    window = length // classes
    n = n_per_class * classes
    series = rng.uniform(-background, background, size=(n, length))
    labels = np.repeat(np.arange(classes), n_per_class)
    for c in range(classes):
        lo, hi = c * window, (c + 1) * window
        level = -level_span + 2.0 * level_span * c / max(classes - 1, 1)
        slope = 1.0 if c % 2 == 0 else -1.0
        ramp = level + slope * np.linspace(0.0, 1.0, hi - lo)
        rows = labels == c
        series[np.ix_(rows, np.arange(lo, hi))] = ramp + rng.normal(
            0.0, noise, size=(n_per_class, hi - lo)
        )
    order = rng.permutation(n)
    label_map = {float(c): c for c in range(classes)}
    return Dataset(series[order], labels[order], classes, name, label_map)


def write_dataset_pair(
    directory: str | Path,
    name: str,
    train: Dataset,
    test: Dataset,
) -> Path:
    """Write `<dir>/<name>/<name>_TRAIN.tsv` and `..._TEST.tsv`."""
    directory = Path(directory) / name
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{name}_TRAIN.tsv").write_text(serialize_ucr_tsv(train))
    (directory / f"{name}_TEST.tsv").write_text(serialize_ucr_tsv(test))
    return directory


def make_smooth_bands_pair(
    directory: str | Path,
    name: str = "SmoothBands",
    n_train_per_class: int = 50,
    n_test_per_class: int = 50,
    length: int = 15,
    classes: int = 3,
    noise: float = 0.3,
    seed: int = 0,
    level_span: float = 2.0,
    background: float = 1.5,
) -> Path:
    """Generate and write a train/test pair; train and test never overlap."""
    train = make_smooth_bands(
        n_train_per_class, length, classes, noise, seed, name, level_span, background
    )
    test = make_smooth_bands(
        n_test_per_class, length, classes, noise, seed + 10_000, name, level_span, background
    )
    return write_dataset_pair(directory, name, train, test)


BENCH_SUITE = (
    # (name, length, classes, n_train_per_class, noise, level_span, background)
    ("SmoothBandsA", 12, 2, 20, 0.6, 1.2, 2.0),
    ("SmoothBandsB", 15, 3, 20, 0.6, 1.5, 2.0),
    ("SmoothBandsC", 18, 3, 16, 0.7, 1.2, 2.0),
    ("SmoothBandsD", 20, 4, 16, 0.6, 1.5, 2.0),
    ("SmoothBandsE", 24, 2, 20, 0.7, 1.2, 2.0),
)


def make_benchmark_suite(directory: str | Path, seed: int = 7) -> list[Path]:
    """Write the five small datasets used for desk-scale sweep trends."""
    paths = []
    for i, (name, length, classes, n_train, noise, span, bg) in enumerate(BENCH_SUITE):
        paths.append(
            make_smooth_bands_pair(
                directory,
                name=name,
                n_train_per_class=n_train,
                n_test_per_class=n_train,
                length=length,
                classes=classes,
                noise=noise,
                seed=seed + 97 * i,
                level_span=span,
                background=bg,
            )
        )
    return paths
