"""
Class-separability data-complexity measures.

N2 compares intra-class to inter-class nearest-neighbour distances, N3 is
the leave-one-out error of the 1-nearest-neighbour classifier. Both are
computed on the +1/-1 labelling of a BinaryView. The module also scores
how awkwardly a class sits inside its group from class centroids, which
drives the exchange step of the encoder.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.spatial.distance import cdist

from src.data_model import BinaryView, Dataset

logger = logging.getLogger(__name__)


class Measure(str, Enum):
    N2 = "N2"
    N3 = "N3"


class SingletonClassError(ValueError):
    """Raised when a sample has no same-class neighbour."""


class DegenerateGeometryError(ValueError):
    """Raised when a distance ratio has a zero denominator it cannot absorb."""


class ComplexityIndex(BaseModel):
    """A complexity value tagged with the measure that produced it."""

    model_config = ConfigDict(frozen=True)

    kind: Measure
    value: float

    @model_validator(mode="after")
    def _check_range(self) -> "ComplexityIndex":
        if not self.value >= 0:
            raise ValueError(f"{self.kind.value} must be >= 0, got {self.value}")
        if self.kind is Measure.N3 and self.value > 1:
            raise ValueError(f"N3 must be <= 1, got {self.value}")
        return self


@dataclass(frozen=True, eq=False)
class ClassCentroid:
    """Coordinate-wise mean of one class's samples."""

    name: str
    center: np.ndarray


def _points_and_labels(v: BinaryView | Dataset) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(v, BinaryView):
        return v.samples, v.targets
    if isinstance(v, Dataset):
        return v.samples, v.label_indices
    raise TypeError(f"expected BinaryView or Dataset, got {type(v)}")


def _neighbour_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix with the diagonal masked out."""
    distances = cdist(points, points)
    np.fill_diagonal(distances, np.inf)
    return distances


def nn_distances(v: BinaryView | Dataset, i: int) -> tuple[float, float]:
    """
    Nearest-neighbour distances of sample `i` inside and outside its class.

    For a BinaryView the "class" is the polarity group; for a Dataset it is
    the class label.

    Args:
        v: View or dataset holding the samples.
        i: Sample position within `v`.

    Returns:
        (intra, inter): distance to the nearest same-class sample other than
        itself, and to the nearest different-class sample.

    Raises:
        SingletonClassError: If sample i is alone in its class.
        ValueError: If no other class exists or i is out of range.
    """
    points, labels = _points_and_labels(v)
    if not 0 <= i < len(labels):
        raise ValueError(f"sample index {i} out of range 0..{len(labels) - 1}")
    distances = cdist(points[i:i + 1], points)[0]
    distances[i] = np.inf
    same = labels == labels[i]
    if not (~same).any():
        raise ValueError("inter-class distance needs a second class")
    intra = distances[same].min()
    if not np.isfinite(intra):
        raise SingletonClassError(f"sample {i} is the only member of its class")
    return float(intra), float(distances[~same].min())


def n2_index(v: BinaryView) -> ComplexityIndex:
    """
    Ratio of summed intra-class to summed inter-class nearest-neighbour
    distances over the view's +1/-1 labelling.

    Samples whose polarity group has a single member have no intra-class
    neighbour and are left out of both sums.

    Raises:
        ValueError: If every sample is excluded.
        DegenerateGeometryError: If all inter-class distances are zero while
            some intra-class distance is not.
    """
    points, labels = _points_and_labels(v)
    distances = _neighbour_distances(points)
    same = labels[:, None] == labels[None, :]
    intra = np.where(same, distances, np.inf).min(axis=1)
    inter = np.where(same, np.inf, distances).min(axis=1)

    valid = np.isfinite(intra)
    if not valid.any():
        raise ValueError("N2 undefined: every polarity group is a single sample")
    if not valid.all():
        logger.debug(f"N2 excludes {int((~valid).sum())} singleton-group samples")

    numerator = float(intra[valid].sum())
    denominator = float(inter[valid].sum())
    if denominator == 0.0:
        if numerator == 0.0:
            return ComplexityIndex(kind=Measure.N2, value=0.0)
        logger.error("N2 denominator is zero: cross-class points coincide")
        raise DegenerateGeometryError("degenerate geometry: all inter-class distances are 0")
    return ComplexityIndex(kind=Measure.N2, value=numerator / denominator)


def loo_nearest_neighbours(points: np.ndarray) -> np.ndarray:
    """Leave-one-out 1-NN of every row; ties go to the lowest index."""
    if points.shape[0] < 2:
        raise ValueError("leave-one-out needs at least 2 samples")
    return _neighbour_distances(points).argmin(axis=1)


def n3_index(v: BinaryView) -> ComplexityIndex:
    """
    Leave-one-out error rate of the 1-NN classifier on the view's labels.

    Raises:
        ValueError: If the view has fewer than 2 samples.
    """
    points, labels = _points_and_labels(v)
    neighbours = loo_nearest_neighbours(points)
    mismatches = int(np.count_nonzero(labels[neighbours] != labels))
    return ComplexityIndex(kind=Measure.N3, value=mismatches / labels.size)


def complexity_index(v: BinaryView, measure: Measure) -> ComplexityIndex:
    if Measure(measure) is Measure.N2:
        return n2_index(v)
    return n3_index(v)


def class_centroids(d: Dataset, group: Iterable[str]) -> list[ClassCentroid]:
    """
    Centroid of every class in `group`, in the order given.

    Raises:
        ValueError: If the group is empty or a class has no samples.
    """
    group = list(group)
    if not group:
        raise ValueError("centroids need a non-empty class group")
    centroids = []
    for name in group:
        members = d.label_indices == d.class_index(name)
        if not members.any():
            raise ValueError(f"class {name!r} has no samples")
        centroids.append(ClassCentroid(name=name, center=d.samples[members].mean(axis=0)))
    return centroids


def _centroid_map(d: Dataset, classes: Iterable[str]) -> dict[str, np.ndarray]:
    return {c.name: c.center for c in class_centroids(d, classes)}


def _summed_distance(centers: dict[str, np.ndarray], k: str, others: Iterable[str]) -> float:
    others = [c for c in others if c != k]
    if not others:
        return 0.0
    stacked = np.vstack([centers[c] for c in others])
    return float(cdist(centers[k][None, :], stacked).sum())


def _ratio_score(centers: dict[str, np.ndarray], own: list[str], other: list[str], k: str) -> float:
    if len(own) == 1:
        return 0.0
    denominator = _summed_distance(centers, k, other)
    if denominator == 0.0:
        logger.error(f"Centroid of {k!r} coincides with every class of the other group")
        raise DegenerateGeometryError(f"degenerate centroids: class {k!r} has zero cross-group distance")
    return _summed_distance(centers, k, own) / denominator


def _resolve_groups(g1: Iterable[str], g2: Iterable[str], k: str) -> tuple[list[str], list[str]]:
    g1, g2 = list(g1), list(g2)
    if not g1 or not g2:
        raise ValueError("both groups must be non-empty")
    if set(g1) & set(g2):
        raise ValueError(f"groups overlap on {sorted(set(g1) & set(g2))}")
    if k in g1:
        return g1, g2
    if k in g2:
        return g2, g1
    raise ValueError(f"class {k!r} is in neither group")


def group_complexity_ratio(d: Dataset, g1: Iterable[str], g2: Iterable[str], k: str) -> float:
    """
    Summed centroid distance from `k` to the other classes of its own group,
    divided by the summed distance to the classes of the opposite group.

    A small value means `k` sits far from its own group and close to the
    other one. Zero when `k` is alone in its group.

    Raises:
        ValueError: If the groups are empty, overlap, or miss `k`.
        DegenerateGeometryError: If the cross-group sum is zero.
    """
    own, other = _resolve_groups(g1, g2, k)
    centers = _centroid_map(d, own + other)
    return _ratio_score(centers, own, other, k)


def group_complexity_sum(d: Dataset, g: Iterable[str], k: str) -> float:
    """Summed centroid distance from `k` to every other class of group `g`."""
    g = list(g)
    if k not in g:
        raise ValueError(f"class {k!r} is not in group {g}")
    return _summed_distance(_centroid_map(d, g), k, g)


def group_scores(
    d: Dataset,
    own: Iterable[str],
    other: Iterable[str],
    measure: Measure,
    centers: Optional[dict[str, np.ndarray]] = None,
) -> dict[str, float]:
    """
    Score every class of `own`: the centroid ratio for N2 searches, the
    within-group centroid sum for N3 searches.

    Args:
        d: Dataset the centroids come from.
        own: Group whose classes are scored.
        other: The opposite group.
        measure: Which complexity measure the search minimises.
        centers: Precomputed centroids keyed by class, if available.

    Returns:
        Class name -> score, in the order of `own`.
    """
    own, other = list(own), list(other)
    if centers is None:
        centers = _centroid_map(d, own + other)
    if Measure(measure) is Measure.N2:
        return {k: _ratio_score(centers, own, other, k) for k in own}
    return {k: _summed_distance(centers, k, own) for k in own}
