"""
Filter feature selection.

Scores each feature by how well it separates two groups (ROC area,
Welch t statistic, Wilcoxon rank-sum z) and keeps the top k. Multiclass
data is scored one-vs-rest per class and each feature keeps its best
score.
"""

import logging
import warnings
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import stats

from src.data_model import BinaryView, Dataset

logger = logging.getLogger(__name__)

# stands in for an unbounded t when both groups are constant but differ
_SATURATED_T = float(np.finfo(np.float64).max)


class FilterMethod(str, Enum):
    ROC = "roc"
    TTEST = "ttest"
    WILCOXON = "wilcoxon"


class FeatureScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    feature: int
    score: float
    method: FilterMethod

    @model_validator(mode="after")
    def _check_score(self) -> "FeatureScore":
        if not (np.isfinite(self.score) and self.score >= 0):
            raise ValueError(f"score must be finite and >= 0, got {self.score}")
        if self.method is FilterMethod.ROC and self.score > 0.5:
            raise ValueError(f"ROC score must be <= 0.5, got {self.score}")
        return self


def _split_groups(X: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    targets = np.asarray(targets)
    positive = targets == 1
    negative = targets == -1
    if not positive.any() or not negative.any():
        raise ValueError("feature scoring needs both +1 and -1 samples")
    if not (positive | negative).all():
        raise ValueError("labels must be +1 or -1")
    return positive, negative


def _roc_scores(X: np.ndarray, positive: np.ndarray) -> np.ndarray:
    ranks = stats.rankdata(X, axis=0)
    n_pos = int(positive.sum())
    n_neg = X.shape[0] - n_pos
    u_statistic = ranks[positive].sum(axis=0) - n_pos * (n_pos + 1) / 2.0
    return np.abs(u_statistic / (n_pos * n_neg) - 0.5)


def _wilcoxon_scores(X: np.ndarray, positive: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    n_pos = int(positive.sum())
    n_neg = n - n_pos
    ranks = stats.rankdata(X, axis=0)
    rank_sum = ranks[positive].sum(axis=0)
    expected = n_pos * (n + 1) / 2.0
    ties = np.array([stats.tiecorrect(ranks[:, j]) for j in range(X.shape[1])])
    variance = n_pos * n_neg * (n + 1) / 12.0 * ties
    scores = np.zeros(X.shape[1])
    spread = variance > 0
    scores[spread] = np.abs(rank_sum[spread] - expected) / np.sqrt(variance[spread])
    return scores


def _ttest_scores(X: np.ndarray, positive: np.ndarray, negative: np.ndarray) -> np.ndarray:
    if X.shape[0] < 4:
        raise ValueError(f"t-test scoring needs N>=4 samples, got {X.shape[0]}")
    a, b = X[positive], X[negative]
    var_a = a.var(axis=0, ddof=1) if a.shape[0] > 1 else np.zeros(X.shape[1])
    var_b = b.var(axis=0, ddof=1) if b.shape[0] > 1 else np.zeros(X.shape[1])
    standard_error = np.sqrt(var_a / a.shape[0] + var_b / b.shape[0])
    gap = a.mean(axis=0) - b.mean(axis=0)

    scores = np.zeros(X.shape[1])
    regular = standard_error > 0
    if regular.any():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = stats.ttest_ind(a[:, regular], b[:, regular], axis=0, equal_var=False)
        scores[regular] = np.abs(result.statistic)
    scores[~regular & (gap != 0)] = _SATURATED_T
    return np.nan_to_num(scores, nan=0.0, posinf=_SATURATED_T)


def score_features(X: np.ndarray, targets: np.ndarray, method: FilterMethod) -> np.ndarray:
    """
    Score every column of X against +1/-1 targets; larger is more
    discriminative.

    roc: |AUC - 0.5| with AUC = U / (n+ n-), ties counted one half.
    ttest: |Welch t|; 0 when both groups are constant and equal.
    wilcoxon: |z| of the rank-sum statistic, tie-corrected normal
        approximation; 0 when every value is tied.

    Raises:
        ValueError: If a polarity is missing (or N<4 for ttest).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    positive, negative = _split_groups(X, targets)
    method = FilterMethod(method)
    if method is FilterMethod.ROC:
        return _roc_scores(X, positive)
    if method is FilterMethod.WILCOXON:
        return _wilcoxon_scores(X, positive)
    return _ttest_scores(X, positive, negative)


def score_feature(values: Sequence[float], labels: Sequence[int], method: FilterMethod, feature: int = 0) -> FeatureScore:
    """Score one feature's values against +1/-1 labels."""
    score = score_features(np.asarray(values, dtype=np.float64)[:, None], np.asarray(labels), method)
    return FeatureScore(feature=feature, score=float(score[0]), method=FilterMethod(method))


def multiclass_scores(d: Dataset, method: FilterMethod) -> np.ndarray:
    """Per feature, the best score over the R one-vs-rest binarizations."""
    best = np.zeros(d.n_features)
    for k in range(d.n_classes):
        targets = np.where(d.label_indices == k, 1, -1)
        if (targets == 1).all() or (targets == -1).all():
            continue
        best = np.maximum(best, score_features(d.samples, targets, method))
    return best


def _top_k(scores: np.ndarray, k: int) -> list[int]:
    if not 1 <= k <= scores.size:
        raise ValueError(f"k must be in 1..{scores.size}, got {k}")
    return [int(j) for j in np.argsort(-scores, kind="stable")[:k]]


def rank_features(d: Dataset, method: FilterMethod) -> list[FeatureScore]:
    """All features in rank order (best first, ties by lowest index)."""
    method = FilterMethod(method)
    scores = multiclass_scores(d, method)
    return [
        FeatureScore(feature=j, score=float(scores[j]), method=method)
        for j in _top_k(scores, scores.size)
    ]


def select_top_k(d: Dataset, k: int, method: FilterMethod) -> list[int]:
    """
    Indices of the k best features of `d` in rank order.

    Raises:
        ValueError: If k is outside 1..F.
    """
    if not 1 <= k <= d.n_features:
        raise ValueError(f"k must be in 1..{d.n_features}, got {k}")
    selected = _top_k(multiclass_scores(d, method), k)
    logger.info(f"Selected {k} of {d.n_features} features by {FilterMethod(method).value}")
    return selected


def select_per_column(view: BinaryView, k: int, method: FilterMethod) -> list[int]:
    """Top k features for a single dichotomy."""
    return _top_k(score_features(view.samples, view.targets, method), k)


def write_selection_csv(scores: Sequence[FeatureScore], d: Dataset, path: str | Path) -> None:
    """rank, feature index, feature name, score, method."""
    rows = [
        {
            "rank": rank + 1,
            "feature": s.feature,
            "name": d.feature_names[s.feature],
            "score": repr(s.score),
            "method": s.method.value,
        }
        for rank, s in enumerate(scores)
    ]
    columns = ["rank", "feature", "name", "score", "method"]
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
