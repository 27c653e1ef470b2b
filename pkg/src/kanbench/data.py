"""UCR-style dataset ingestion, standardization, and stratified splitting.

Datasets are tab-separated text, one series per line, class label first.
Raw labels are remapped to contiguous indices 0..C-1 in ascending numeric
order, independent of row order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, EmptyDatasetError, FormatError


@dataclass(frozen=True)
class Dataset:
    """Equal-length labeled series: N rows of T values plus N class indices."""

    series: np.ndarray  # (N, T) float64
    labels: np.ndarray  # (N,) int64, values in [0, class_count)
    class_count: int
    name: str
    label_map: dict[float, int]  # raw label -> contiguous index

    @property
    def n_rows(self) -> int:
        return self.series.shape[0]

    @property
    def length(self) -> int:
        return self.series.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            self.series[idx], self.labels[idx], self.class_count, self.name,
            self.label_map,
        )


@dataclass(frozen=True)
class ScalerParams:
    """Per-time-step mean and population standard deviation."""

    means: np.ndarray
    stds: np.ndarray


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic train/validation partition recipe."""

    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")


def parse_ucr_tsv(text: str, name: str = "") -> Dataset:
    """Parse `label<TAB>v1<TAB>...<TAB>vT` lines into a Dataset.

    All rows must share the same length; labels must parse as numbers and
    get remapped in ascending order to 0..C-1.  NaN tokens are rejected
    (datasets with missing values are out of scope).
    """
    raw_labels: list[float] = []
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split("\t")
        if len(tokens) < 2:
            raise FormatError(f"line {lineno}: expected a label and at least one value")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: unparseable token ({exc})") from exc
        if not all(np.isfinite(values)):
            raise FormatError(f"line {lineno}: non-finite value (missing data?)")
        if width is None:
            width = len(tokens) - 1
        elif len(tokens) - 1 != width:
            raise FormatError(
                f"line {lineno}: row has {len(tokens) - 1} values, expected {width}"
            )
        raw_labels.append(values[0])
        rows.append(values[1:])
    if not rows:
        raise EmptyDatasetError("no data rows found")

    distinct = sorted(set(raw_labels))
    label_map = {raw: idx for idx, raw in enumerate(distinct)}
    labels = np.array([label_map[r] for r in raw_labels], dtype=np.int64)
    series = np.array(rows, dtype=np.float64)
    return Dataset(series, labels, len(distinct), name, label_map)


def serialize_ucr_tsv(ds: Dataset) -> str:
    """Inverse of parse_ucr_tsv (emits the raw labels, not the indices)."""
    inverse = {idx: raw for raw, idx in ds.label_map.items()}
    lines = []
    for row, lab in zip(ds.series, ds.labels):
        raw = inverse[int(lab)]
        raw_tok = repr(int(raw)) if float(raw).is_integer() else repr(float(raw))
        lines.append("\t".join([raw_tok] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def read_dataset(path: str | Path, name: str = "") -> Dataset:
    path = Path(path)
    return parse_ucr_tsv(path.read_text(), name or path.stem)


def load_ucr_pair(directory: str | Path, name: str | None = None) -> tuple[Dataset, Dataset]:
    """Load `<name>_TRAIN.tsv` / `<name>_TEST.tsv` from a dataset directory.

    Test labels are remapped through the training label_map so both parts
    share one index space; a test label unseen in training is an error.
    """
    directory = Path(directory)
    if name is None:
        name = directory.name
    train = read_dataset(directory / f"{name}_TRAIN.tsv", name)
    test_raw = read_dataset(directory / f"{name}_TEST.tsv", name)
    inverse = {idx: raw for raw, idx in test_raw.label_map.items()}
    try:
        remapped = np.array(
            [train.label_map[inverse[int(l)]] for l in test_raw.labels], dtype=np.int64
        )
    except KeyError as exc:
        raise FormatError(f"{name}: test label {exc} not present in training data") from exc
    test = Dataset(test_raw.series, remapped, train.class_count, name, train.label_map)
    if train.length != test.length:
        raise DimensionError(
            f"{name}: train length {train.length} != test length {test.length}"
        )
    return train, test


def fit_scaler(train: Dataset) -> ScalerParams:
    """Column means and population standard deviations of the training series."""
    if train.n_rows < 1:
        raise EmptyDatasetError("cannot fit a scaler on an empty dataset")
    means = train.series.mean(axis=0)
    stds = train.series.std(axis=0)  # population form (divide by N)
    return ScalerParams(means, stds)


def apply_scaler(ds: Dataset, sc: ScalerParams) -> Dataset:
    """Standardize each column; zero-variance columns map to 0 entirely."""
    if ds.length != len(sc.means):
        raise DimensionError(
            f"dataset has {ds.length} columns, scaler was fit on {len(sc.means)}"
        )
    safe = np.where(sc.stds > 0.0, sc.stds, 1.0)
    scaled = (ds.series - sc.means) / safe
    scaled[:, sc.stds == 0.0] = 0.0
    return Dataset(scaled, ds.labels, ds.class_count, ds.name, ds.label_map)


def stratified_split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition rows into train/validation parts, class by class.

    Within each class the row order is shuffled by spec.seed alone; the
    train part takes round(train_fraction * n) rows, clamped so both parts
    are non-empty where the class allows it.  A single-member class goes
    entirely to the train part (warned, not an error).
    """
    train_idx, val_idx = split_indices(
        ds.labels, ds.class_count, spec, stratify=True
    )
    return ds.subset(train_idx), ds.subset(val_idx)


def split_indices(
    labels: np.ndarray, class_count: int, spec: SplitSpec, stratify: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Index sets behind stratified_split; stratify=False is a plain shuffle."""
    rng = np.random.default_rng(spec.seed)
    n = len(labels)
    if not stratify:
        perm = rng.permutation(n)
        n_train = min(max(int(round(spec.train_fraction * n)), 1), n - 1) if n > 1 else n
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])

    train_parts, val_parts = [], []
    for c in range(class_count):
        members = np.flatnonzero(labels == c)
        if len(members) == 0:
            continue
        if len(members) == 1:
            warnings.warn(
                f"class {c} has a single member; validation part will lack it",
                stacklevel=2,
            )
            train_parts.append(members)
            continue
        shuffled = members[rng.permutation(len(members))]
        n_train = int(round(spec.train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train_parts.append(shuffled[:n_train])
        val_parts.append(shuffled[n_train:])
    train_idx = np.sort(np.concatenate(train_parts))
    val_idx = np.sort(np.concatenate(val_parts)) if val_parts else np.array([], dtype=np.int64)
    return train_idx, val_idx
