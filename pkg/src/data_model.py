"""
Dataset module for the ECOC toolkit.

Holds the immutable sample matrix + labels representation used by every
other module, CSV ingestion, the synthetic Gaussian blob generator,
stratified train/test splits, and the two-group relabeling (BinaryView)
that each coding-matrix column trains on.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Raised when data cannot form a valid Dataset."""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    N samples of F real features, each labelled with one of R classes.

    Class identifiers are strings; their integer codes follow the order of
    `class_names` (first appearance when loaded from a file).
    """

    samples: np.ndarray
    labels: tuple[str, ...]
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...] = ()
    label_name: str = "label"
    label_indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise DatasetError(
                f"samples must be a 2-D matrix, got shape {samples.shape}")
        labels = tuple(str(label) for label in self.labels)
        class_names = tuple(str(name) for name in self.class_names)
        n_samples, n_features = samples.shape

        if len(labels) != n_samples:
            raise DatasetError(
                f"{len(labels)} labels for {n_samples} samples")
        if n_features < 1:
            raise DatasetError("dataset needs at least one feature (F<1)")
        if len(set(class_names)) != len(class_names):
            raise DatasetError(f"duplicate class names in {class_names}")
        if not np.all(np.isfinite(samples)):
            row, col = np.argwhere(~np.isfinite(samples))[0]
            raise DatasetError(
                f"non-finite feature value at row {row}, column {col}")

        position = {name: idx for idx, name in enumerate(class_names)}
        unknown = sorted(set(labels) - position.keys())
        if unknown:
            raise DatasetError(f"labels not in class_names: {unknown}")

        feature_names = tuple(self.feature_names) or tuple(
            f"f{j}" for j in range(n_features))
        if len(feature_names) != n_features:
            raise DatasetError(
                f"{len(feature_names)} feature names for {n_features} features")

        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", class_names)
        object.__setattr__(self, "feature_names", feature_names)
        object.__setattr__(
            self,
            "label_indices",
            _frozen(np.array([position[label] for label in labels], dtype=np.intp)),
        )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ValueError(f"unknown class {name!r}") from None

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.label_indices, minlength=self.n_classes)
        return {name: int(n) for name, n in zip(self.class_names, counts)}

    def check_complete(self) -> None:
        """
        Enforce the full training-set invariants: N >= 2, R >= 2 and every
        class in class_names has at least one sample.

        Raises:
            DatasetError: If any invariant fails.
        """
        if self.n_samples < 2:
            raise DatasetError(f"dataset needs N>=2 samples, got {self.n_samples}")
        if self.n_classes < 2:
            raise DatasetError(f"dataset needs R>=2 classes, got R={self.n_classes}")
        empty = [name for name, n in self.class_counts().items() if n == 0]
        if empty:
            raise DatasetError(f"classes without samples: {empty}")

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Rows `indices` in the given order; class_names are kept."""
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            samples=self.samples[indices],
            labels=tuple(self.labels[i] for i in indices),
            class_names=self.class_names,
            feature_names=self.feature_names,
            label_name=self.label_name,
        )

    def select_features(self, indices: Sequence[int]) -> "Dataset":
        """Columns `indices` in the given order."""
        indices = np.asarray(indices, dtype=np.intp)
        if indices.size == 0:
            raise ValueError("feature selection must keep at least one feature")
        if indices.min() < 0 or indices.max() >= self.n_features:
            raise ValueError(
                f"feature indices out of range 0..{self.n_features - 1}")
        return Dataset(
            samples=self.samples[:, indices],
            labels=self.labels,
            class_names=self.class_names,
            feature_names=tuple(self.feature_names[j] for j in indices),
            label_name=self.label_name,
        )


@dataclass(frozen=True, eq=False)
class BinaryView:
    """
    A Dataset restricted to the classes of two groups, relabelled +1 / -1.

    Attributes:
        base: The full dataset.
        polarity: Class name -> +1 (first group) or -1 (second group).
        indices: Rows of `base` kept by the view, in base order.
    """

    base: Dataset
    polarity: dict[str, int]
    indices: np.ndarray

    @property
    def samples(self) -> np.ndarray:
        return self.base.samples[self.indices]

    @property
    def targets(self) -> np.ndarray:
        return np.array(
            [self.polarity[self.base.labels[i]] for i in self.indices],
            dtype=np.int8,
        )

    @property
    def positive(self) -> tuple[str, ...]:
        return tuple(c for c in self.base.class_names if self.polarity.get(c) == 1)

    @property
    def negative(self) -> tuple[str, ...]:
        return tuple(c for c in self.base.class_names if self.polarity.get(c) == -1)

    def __len__(self) -> int:
        return int(self.indices.size)


def binary_view(d: Dataset, g1: Iterable[str], g2: Iterable[str]) -> BinaryView:
    """
    Relabel the samples of g1 as +1 and g2 as -1, dropping all other classes.

    Args:
        d: Source dataset.
        g1: Classes mapped to +1.
        g2: Classes mapped to -1.

    Returns:
        BinaryView over the retained samples.

    Raises:
        ValueError: If a group is empty, the groups overlap, or a class is
            unknown to the dataset.
    """
    g1, g2 = set(g1), set(g2)
    if not g1 or not g2:
        raise ValueError("both groups of a binary view must be non-empty")
    overlap = g1 & g2
    if overlap:
        raise ValueError(f"groups overlap on classes {sorted(overlap)}")
    unknown = (g1 | g2) - set(d.class_names)
    if unknown:
        raise ValueError(f"classes not in dataset: {sorted(unknown)}")

    polarity = {c: 1 for c in g1} | {c: -1 for c in g2}
    indices = np.flatnonzero([label in polarity for label in d.labels])
    targets = {polarity[d.labels[i]] for i in indices}
    if targets != {1, -1}:
        raise ValueError("binary view needs samples of both polarities")
    return BinaryView(base=d, polarity=polarity, indices=_frozen(indices))


def load_csv(path: str | Path, label_column: Optional[str] = None) -> Dataset:
    """
    Load a labelled dataset from a CSV file.

    Args:
        path: CSV with a header row, one sample per row.
        label_column: Name of the label column (default: the last column).

    Returns:
        Dataset with class_names in first-appearance order.

    Raises:
        FileNotFoundError: If the file does not exist.
        DatasetError: On a non-numeric or non-finite cell (row and column
            reported), N<2 or R<2.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    logger.info(f"Loading dataset: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    if frame.shape[1] < 2:
        raise DatasetError(f"{path}: need at least one feature and one label column")
    label_column = label_column or frame.columns[-1]
    if label_column not in frame.columns:
        raise DatasetError(f"{path}: no label column named {label_column!r}")

    feature_columns = [c for c in frame.columns if c != label_column]
    numeric = frame[feature_columns].apply(
        lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        cell = frame[feature_columns[col]].iloc[row]
        # +2: one for the header row, one for 1-based numbering
        logger.error(f"Unparseable cell in {path}: row {row + 2}, column {feature_columns[col]}")
        raise DatasetError(
            f"{path}: cannot parse {cell!r} at row {row + 2}, "
            f"column {feature_columns[col]!r}")

    labels = tuple(frame[label_column].str.strip())
    class_names = tuple(dict.fromkeys(labels))
    dataset = Dataset(
        samples=numeric.to_numpy(dtype=np.float64),
        labels=labels,
        class_names=class_names,
        feature_names=tuple(feature_columns),
        label_name=label_column,
    )
    if dataset.n_samples < 2:
        raise DatasetError(f"{path}: N<2 (found {dataset.n_samples} samples)")
    if dataset.n_classes < 2:
        raise DatasetError(f"{path}: R<2 (found only class {class_names[0]!r})")
    logger.info(
        f"Loaded {dataset.n_samples} samples, {dataset.n_features} features, "
        f"{dataset.n_classes} classes from {path}")
    return dataset


def write_csv(d: Dataset, path: str | Path) -> None:
    """Write `d` as a CSV that load_csv reads back into an equal Dataset."""
    frame = pd.DataFrame(d.samples, columns=list(d.feature_names))
    frame[d.label_name] = list(d.labels)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"Wrote {d.n_samples} samples to {path}")


def generate_blobs(
    R: int,
    per_class: int,
    F: int,
    informative: int,
    spread: float,
    seed: int,
) -> Dataset:
    """
    Draw R isotropic Gaussian classes that differ only on planted features.

    For every informative feature the R class means are a random
    permutation of R evenly spaced levels in [-1, 1]; all other features
    have mean 0 for every class. Informative positions are drawn at random
    and named `informative_<j>`, the rest `noise_<j>`.

    Args:
        R: Number of classes (>= 2).
        per_class: Samples per class (>= 2).
        F: Number of features (>= 1).
        informative: Number of planted features (0..F).
        spread: Standard deviation of every class Gaussian (> 0).
        seed: Random seed.

    Returns:
        Dataset with classes `c1..cR`, rows grouped by class.

    Raises:
        ValueError: On invalid dimensions or a non-positive spread.
    """
    if R < 2:
        raise ValueError(f"need at least 2 classes, got R={R}")
    if per_class < 2:
        raise ValueError(f"need at least 2 samples per class, got {per_class}")
    if F < 1:
        raise ValueError(f"need at least one feature, got F={F}")
    if not 0 <= informative <= F:
        raise ValueError(f"informative must be in 0..{F}, got {informative}")
    if not spread > 0:
        raise ValueError(f"spread must be positive, got {spread}")

    rng = np.random.default_rng(seed)
    planted = np.sort(rng.choice(F, size=informative, replace=False))
    levels = np.linspace(-1.0, 1.0, R)
    means = np.zeros((R, F))
    for j in planted:
        means[:, j] = rng.permutation(levels)

    blocks = [rng.normal(means[k], spread, size=(per_class, F)) for k in range(R)]
    class_names = tuple(f"c{k + 1}" for k in range(R))
    planted_set = set(planted.tolist())
    feature_names = tuple(
        f"informative_{j}" if j in planted_set else f"noise_{j}" for j in range(F))
    logger.debug(f"Generated blobs R={R} per_class={per_class} F={F} planted={planted.tolist()}")
    return Dataset(
        samples=np.vstack(blocks),
        labels=tuple(name for name in class_names for _ in range(per_class)),
        class_names=class_names,
        feature_names=feature_names,
    )


def planted_features(d: Dataset) -> list[int]:
    """Indices of features generate_blobs planted as informative."""
    return [j for j, name in enumerate(d.feature_names) if name.startswith("informative_")]


def split_indices(
    d: Dataset, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Stratified index split: each class sends ceil(train_fraction * n_k)
    samples to training, keeping at least one on each side.

    Raises:
        ValueError: If train_fraction is outside (0, 1) or a class has fewer
            than 2 samples.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    counts = d.class_counts()
    too_small = [name for name, n in counts.items() if n < 2]
    if too_small:
        raise ValueError(f"classes with fewer than 2 samples cannot be split: {too_small}")

    rng = np.random.default_rng(seed)
    train, test = [], []
    for k in range(d.n_classes):
        members = np.flatnonzero(d.label_indices == k)
        shuffled = rng.permutation(members)
        # guard against 0.7 * 10 landing a hair above 7
        n_train = math.ceil(train_fraction * members.size - 1e-9)
        n_train = min(max(n_train, 1), members.size - 1)
        train.append(shuffled[:n_train])
        test.append(shuffled[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split_stratified(
    d: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Stratified train/test split; row order is preserved on both sides."""
    train_idx, test_idx = split_indices(d, train_fraction, seed)
    logger.info(f"Split {d.n_samples} samples into {train_idx.size} train / {test_idx.size} test")
    return d.subset(train_idx), d.subset(test_idx)


def standardize(train: Dataset, *others: Dataset) -> tuple[Dataset, ...]:
    """
    Z-score every feature with the training mean and standard deviation.

    Features with zero training deviation are only centred.

    Returns:
        The standardized training set followed by each of `others`.
    """
    mean = train.samples.mean(axis=0)
    scale = train.samples.std(axis=0)
    constant = scale == 0
    if constant.any():
        logger.warning(f"{int(constant.sum())} constant features left unscaled")
    scale = np.where(constant, 1.0, scale)

    def apply(d: Dataset) -> Dataset:
        if d.n_features != train.n_features:
            raise ValueError(
                f"feature count mismatch: {d.n_features} vs {train.n_features}")
        return Dataset(
            samples=(d.samples - mean) / scale,
            labels=d.labels,
            class_names=d.class_names,
            feature_names=d.feature_names,
            label_name=d.label_name,
        )

    return tuple(apply(d) for d in (train, *others))
