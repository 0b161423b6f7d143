"""
ECOC training and decoding.

One dichotomizer is trained per coding-matrix column on the samples of the
classes that column names (+1 / -1); classes with a 0 entry are left out.
A test sample's code vector is matched against every class codeword with a
Hamming distance that skips zero entries and is normalized by the number of
active columns of the row.
"""

import configparser
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from src.data_model import Dataset, binary_view
from src.dichotomizers import (
    DichotomizerModel,
    LearnerHyperparameters,
    LearnerKind,
    model_record,
    train,
)
from src.encoder import CodingMatrix, derive_seed
from src.feature_selection import FilterMethod, select_per_column

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EcocModel:
    """
    A coding matrix with its trained column models.

    Attributes:
        matrix: The coding matrix.
        column_models: One dichotomizer per column.
        feature_subset: Indices of the input features the models see
            (global selection); None keeps every feature.
        n_features: Feature count of the inputs the model accepts.
        column_features: Per-column feature indices, relative to
            feature_subset, when selection was done per dichotomy.
        hyper: Hyperparameters the models were fit with.
    """

    matrix: CodingMatrix
    column_models: tuple[DichotomizerModel, ...]
    feature_subset: Optional[tuple[int, ...]]
    n_features: int
    column_features: Optional[tuple[tuple[int, ...], ...]] = None
    hyper: LearnerHyperparameters = field(default_factory=LearnerHyperparameters)

    @property
    def class_order(self) -> tuple[str, ...]:
        return self.matrix.class_order

    def project(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        if self.feature_subset is None:
            return X
        return X[:, list(self.feature_subset)]


def fit(
    d: Dataset,
    matrix: CodingMatrix,
    kind: LearnerKind,
    hyper: Optional[LearnerHyperparameters] = None,
    seed: int = 0,
    feature_subset: Optional[Sequence[int]] = None,
    per_column_k: Optional[int] = None,
    fs_method: Optional[FilterMethod] = None,
) -> EcocModel:
    """
    Train one dichotomizer per column of `matrix`.

    Args:
        d: Training data in the full feature space.
        matrix: Coding matrix over (a subset of) the dataset's classes.
        kind: Learner for every column.
        hyper: Learner hyperparameters.
        seed: Base seed; column j trains with a seed derived from (seed, j).
        feature_subset: Globally selected feature indices.
        per_column_k: When set, each column keeps its own top-k features
            chosen on its binary view with `fs_method`.
        fs_method: Filter used for per-column selection.

    Returns:
        The fitted EcocModel.

    Raises:
        ValueError: If the matrix names classes missing from the dataset, or
            per-column selection is requested without a method.
    """
    missing = sorted(set(matrix.class_order) - set(d.class_names))
    if missing:
        raise ValueError(f"coding matrix classes not in dataset: {missing}")
    if per_column_k is not None and fs_method is None:
        raise ValueError("per-column selection needs a filter method")
    hyper = hyper or LearnerHyperparameters()

    n_features = d.n_features
    subset = tuple(int(j) for j in feature_subset) if feature_subset is not None else None
    data = d.select_features(subset) if subset is not None else d

    models, column_features = [], []
    for j in range(matrix.n_columns):
        view = binary_view(data, matrix.positive(j), matrix.negative(j))
        assert set(view.targets.tolist()) == {-1, 1}, f"column {j} has a single polarity"
        features = None
        if per_column_k is not None:
            features = np.array(select_per_column(view, per_column_k, fs_method))
            column_features.append(tuple(int(f) for f in features))
        models.append(train(kind, view, hyper, derive_seed(seed, j), features))
        logger.debug(f"Column {j + 1}/{matrix.n_columns}: trained on {len(view)} samples")

    logger.info(f"Fitted {matrix.n_columns} {LearnerKind(kind).value} dichotomizers")
    return EcocModel(
        matrix=matrix,
        column_models=tuple(models),
        feature_subset=subset,
        n_features=n_features,
        column_features=tuple(column_features) if per_column_k is not None else None,
        hyper=hyper,
    )


def code_vectors(model: EcocModel, X: np.ndarray) -> np.ndarray:
    """(n, L) matrix of column-model outputs in {-1, +1}."""
    Z = model.project(X)
    outputs = []
    for j, column_model in enumerate(model.column_models):
        inputs = Z if model.column_features is None else Z[:, list(model.column_features[j])]
        outputs.append(column_model.predict_many(inputs))
    return np.column_stack(outputs) if outputs else np.zeros((Z.shape[0], 0), dtype=np.int8)


def codeword_distances(matrix: CodingMatrix, s: np.ndarray, normalized: bool = True) -> np.ndarray:
    """
    Distance of code vector(s) `s` to every class codeword.

    Per active (nonzero) entry a disagreement costs 1 and an agreement 0;
    zero entries are skipped. With `normalized` the sum is divided by the
    row's active-column count.

    Returns:
        (R,) for a single vector, (n, R) for a matrix of vectors.
    """
    s = np.asarray(s, dtype=np.float64)
    single = s.ndim == 1
    S = s[None, :] if single else s
    if S.shape[1] != matrix.n_columns:
        raise ValueError(f"code vector has {S.shape[1]} entries, matrix has {matrix.n_columns} columns")
    M = matrix.entries.astype(np.float64)
    active = M != 0
    # (1 - M s) / 2 is 1 on disagreement, 0 on agreement, 1/2 where M is 0
    cost = ((1.0 - M[None, :, :] * S[:, None, :]) / 2.0) * active[None, :, :]
    distances = cost.sum(axis=2)
    if normalized:
        distances = distances / matrix.active_counts()[None, :]
    return distances[0] if single else distances


def decode_details(
    model: EcocModel, X: np.ndarray, normalized: bool = True
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """
    Predicted classes with the code vectors and distances behind them.

    Returns:
        (predicted class names, (n, L) code vectors, (n, R) distances).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2 and X.shape[0] == 0:
        return [], np.zeros((0, model.matrix.n_columns)), np.zeros((0, model.matrix.n_classes))
    codes = code_vectors(model, X)
    distances = codeword_distances(model.matrix, codes, normalized)
    # argmin returns the first minimum, i.e. the lowest class index
    winners = distances.argmin(axis=1)
    return [model.class_order[r] for r in winners], codes, distances


def decode(model: EcocModel, x: np.ndarray, normalized: bool = True) -> str:
    """
    Class whose codeword is nearest to the code vector of `x`.

    Raises:
        ValueError: If x does not have the model's input feature count.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"decode takes one feature vector, got shape {x.shape}")
    predicted, _, _ = decode_details(model, x[None, :], normalized)
    return predicted[0]


def predict_batch(model: EcocModel, d: Dataset | np.ndarray, normalized: bool = True) -> list[str]:
    """Decode every row of a dataset (or raw sample matrix)."""
    X = d.samples if isinstance(d, Dataset) else np.asarray(d, dtype=np.float64)
    if X.size == 0:
        return []
    predicted, _, _ = decode_details(model, X, normalized)
    return predicted


def write_predictions_csv(
    model: EcocModel,
    d: Dataset,
    path: str | Path,
    normalized: bool = True,
) -> list[str]:
    """
    Decode `d` and write sample index, true label, predicted label and the
    distance to every class.

    Returns:
        The predicted labels.
    """
    predicted, _, distances = decode_details(model, d.samples, normalized)
    frame = pd.DataFrame({
        "sample": np.arange(d.n_samples),
        "true": list(d.labels),
        "predicted": predicted,
    })
    for r, name in enumerate(model.class_order):
        frame[f"dist_{name}"] = distances[:, r]
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n", float_format="%.6f")
    return predicted


def write_models(model: EcocModel, path: str | Path) -> None:
    """One INI section per column with the learner kind, settings and parameters."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["ecoc"] = {
        "columns": str(model.matrix.n_columns),
        "classes": " ".join(model.class_order),
        "n_features": str(model.n_features),
        "feature_subset": "" if model.feature_subset is None else " ".join(map(str, model.feature_subset)),
    }
    for j, column_model in enumerate(model.column_models):
        section = model_record(column_model, model.hyper)
        if model.column_features is not None:
            section["column_features"] = " ".join(map(str, model.column_features[j]))
        parser[f"column c{j + 1}"] = section
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        parser.write(handle)
    logger.info(f"Wrote {model.matrix.n_columns} column models to {path}")
