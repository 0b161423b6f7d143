"""
Macro-averaged evaluation metrics.

Each class in turn is the positive class of a one-vs-all confusion table;
accuracy, precision, recall and F-score are computed per class and
averaged with equal class weight. A per-class ratio with a zero
denominator contributes 0.
"""

import logging
from pathlib import Path
from typing import Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)


class ClassCounts(BaseModel):
    """One-vs-all confusion counts and ratios for one class."""

    model_config = ConfigDict(frozen=True)

    name: str
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    fscore: float

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


class EvalReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_class: tuple[ClassCounts, ...]
    accuracy: float = Field(ge=0, le=1)
    precision: float = Field(ge=0, le=1)
    recall: float = Field(ge=0, le=1)
    fscore: float = Field(ge=0, le=1)
    beta: float = 1.0
    n_samples: int

    @model_validator(mode="after")
    def _check_counts(self) -> "EvalReport":
        for counts in self.per_class:
            if counts.positives + counts.negatives != self.n_samples:
                raise ValueError(f"counts of class {counts.name} do not add up to {self.n_samples}")
        return self


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def evaluate(
    true_labels: Sequence[str],
    predicted_labels: Sequence[str],
    classes: Sequence[str],
    beta: float = 1.0,
) -> EvalReport:
    """
    Macro accuracy, precision, recall and F-beta over `classes`.

    Args:
        true_labels: Ground-truth class of each sample.
        predicted_labels: Predicted class of each sample.
        classes: The class set to average over.
        beta: F-score weight of recall (1 balances precision and recall).

    Returns:
        EvalReport with per-class counts and the four macro averages.

    Raises:
        ValueError: On a length mismatch, an unknown predicted class, or a
            non-positive beta.
    """
    true_labels = [str(t) for t in true_labels]
    predicted_labels = [str(p) for p in predicted_labels]
    classes = [str(c) for c in classes]
    if len(true_labels) != len(predicted_labels):
        raise ValueError(
            f"{len(true_labels)} true labels but {len(predicted_labels)} predictions")
    if not classes:
        raise ValueError("class set must be non-empty")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    unknown = sorted(set(predicted_labels) - set(classes))
    if unknown:
        raise ValueError(f"predictions outside the class set: {unknown}")

    total = len(true_labels)
    beta2 = beta * beta
    per_class = []
    for name in classes:
        tp = sum(t == name and p == name for t, p in zip(true_labels, predicted_labels))
        fn = sum(t == name and p != name for t, p in zip(true_labels, predicted_labels))
        fp = sum(t != name and p == name for t, p in zip(true_labels, predicted_labels))
        tn = total - tp - fn - fp
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        per_class.append(ClassCounts(
            name=name, tp=tp, tn=tn, fp=fp, fn=fn,
            accuracy=_ratio(tp + tn, total),
            precision=precision,
            recall=recall,
            fscore=_ratio((beta2 + 1) * precision * recall, beta2 * precision + recall),
        ))

    def macro(attribute: str) -> float:
        return sum(getattr(c, attribute) for c in per_class) / len(per_class)

    report = EvalReport(
        per_class=tuple(per_class),
        accuracy=macro("accuracy"),
        precision=macro("precision"),
        recall=macro("recall"),
        fscore=macro("fscore"),
        beta=beta,
        n_samples=total,
    )
    logger.info(
        f"Macro accuracy {report.accuracy:.4f}, F-score {report.fscore:.4f} over {total} samples")
    return report


def report_table(rows: Sequence[tuple[str, str, EvalReport]]) -> pd.DataFrame:
    """
    Lay results out one row per method.

    Args:
        rows: (method, dataset name, report) triples.

    Returns:
        DataFrame with `<dataset> Accuracy` / `<dataset> Fscore` column pairs
        in first-seen dataset order, then `Average Accuracy`,
        `Average Fscore`, `Average Precision` and `Average Recall`.
    """
    methods = list(dict.fromkeys(method for method, _, _ in rows))
    datasets = list(dict.fromkeys(name for _, name, _ in rows))
    lookup = {(method, name): report for method, name, report in rows}

    records = []
    for method in methods:
        record: dict[str, object] = {"Method": method}
        reports = []
        for name in datasets:
            report = lookup.get((method, name))
            record[f"{name} Accuracy"] = report.accuracy if report else None
            record[f"{name} Fscore"] = report.fscore if report else None
            if report:
                reports.append(report)
        for attribute in ("accuracy", "fscore", "precision", "recall"):
            values = [getattr(r, attribute) for r in reports]
            record[f"Average {attribute.capitalize()}"] = sum(values) / len(values) if values else None
        records.append(record)
    return pd.DataFrame(records)


def write_report_csv(table: pd.DataFrame, path: str | Path) -> None:
    table.to_csv(path, index=False, encoding="utf-8", lineterminator="\n", float_format="%.6f")
