"""
Coding-matrix construction.

The data-driven encoder grows a binary tree over the class set: every node
splits its classes into two groups with a local search that exchanges the
most awkward class of each group while the N2 or N3 complexity of the
split keeps dropping. Each node becomes one column of a ternary coding
matrix (+1 first group, -1 second group, 0 classes outside the node), so R
classes always give R-1 columns. One-vs-all, one-vs-one and ordinal codes
are provided as baselines.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from src.complexity import (
    ComplexityIndex,
    Measure,
    class_centroids,
    complexity_index,
    group_scores,
)
from src.data_model import Dataset, binary_view

logger = logging.getLogger(__name__)


class ExchangeRule(str, Enum):
    """
    How the class to exchange is picked under the N2 ratio score.

    prose: the class with the minimum ratio is the most complex.
    pseudocode: the class with the maximum ratio is picked.
    The N3 within-group sum always picks the maximum.
    """

    PROSE = "prose"
    PSEUDOCODE = "pseudocode"


class EncoderName(str, Enum):
    ECOCECS_N2 = "ecocecs-n2"
    ECOCECS_N3 = "ecocecs-n3"
    OVA = "ova"
    OVO = "ovo"
    ORDINAL = "ordinal"


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for `keys` (node id, restart number) under `seed`."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class PartitionState:
    """
    Two-group split of a node's classes with its accepted index history.

    `trace` holds the complexity of every accepted partition in order and
    `history` the matching (g1, g2) pairs; the last entries describe the
    current split.
    """

    g1: tuple[str, ...]
    g2: tuple[str, ...]
    index: ComplexityIndex
    trace: tuple[float, ...]
    history: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = ()

    def __post_init__(self) -> None:
        if not self.g1 or not self.g2:
            raise ValueError("partition groups must be non-empty")
        if set(self.g1) & set(self.g2):
            raise ValueError("partition groups must be disjoint")
        if not self.trace or self.trace[-1] != self.index.value:
            raise ValueError("trace must end with the current index")
        if any(later >= earlier for earlier, later in zip(self.trace, self.trace[1:])):
            raise ValueError(f"trace must be strictly decreasing: {self.trace}")

    @property
    def exchanges(self) -> int:
        return len(self.trace) - 1

    @property
    def classes(self) -> tuple[str, ...]:
        return self.g1 + self.g2


class ColumnMeta(BaseModel):
    """Provenance of one coding-matrix column."""

    model_config = ConfigDict(frozen=True)

    node_id: int
    parent_id: Optional[int] = None
    measure: Optional[Measure] = None
    index: Optional[float] = None
    trace: tuple[float, ...] = ()
    history: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...] = ()


@dataclass(frozen=True, eq=False)
class CodingMatrix:
    """R x L ternary matrix; row r is the codeword of class_order[r]."""

    entries: np.ndarray
    class_order: tuple[str, ...]
    column_meta: tuple[ColumnMeta, ...] = field(default=())

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.int8)
        if entries.ndim != 2 or entries.shape[0] != len(self.class_order):
            raise ValueError(
                f"entries shape {entries.shape} does not match {len(self.class_order)} classes")
        if not np.isin(entries, (-1, 0, 1)).all():
            raise ValueError("coding matrix entries must be -1, 0 or +1")
        entries.setflags(write=False)
        meta = tuple(self.column_meta) or tuple(
            ColumnMeta(node_id=j) for j in range(entries.shape[1]))
        if len(meta) != entries.shape[1]:
            raise ValueError(f"{len(meta)} column records for {entries.shape[1]} columns")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "class_order", tuple(self.class_order))
        object.__setattr__(self, "column_meta", meta)

    @property
    def n_classes(self) -> int:
        return self.entries.shape[0]

    @property
    def n_columns(self) -> int:
        return self.entries.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def positive(self, j: int) -> tuple[str, ...]:
        return tuple(c for c, v in zip(self.class_order, self.column(j)) if v == 1)

    def negative(self, j: int) -> tuple[str, ...]:
        return tuple(c for c, v in zip(self.class_order, self.column(j)) if v == -1)

    def node_classes(self, j: int) -> tuple[str, ...]:
        return tuple(c for c, v in zip(self.class_order, self.column(j)) if v != 0)

    def active_counts(self) -> np.ndarray:
        """Number of nonzero entries in every row."""
        return np.count_nonzero(self.entries, axis=1)

    def validate(self) -> None:
        """
        Check the structural invariants every encoder guarantees.

        Raises:
            ValueError: If a column lacks a +1 or a -1, a row is all zeros,
                or two rows are identical.
        """
        for j in range(self.n_columns):
            column = self.column(j)
            if not (column == 1).any() or not (column == -1).any():
                raise ValueError(f"column {j} needs both a +1 and a -1")
        empty = np.flatnonzero(self.active_counts() == 0)
        if empty.size:
            raise ValueError(f"all-zero rows: {[self.class_order[r] for r in empty]}")
        if np.unique(self.entries, axis=0).shape[0] != self.n_classes:
            raise ValueError("coding matrix has identical rows")


def _ordered(d: Dataset, classes: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(classes), key=d.class_index))


def most_complex_class(
    d: Dataset,
    own: Sequence[str],
    other: Sequence[str],
    measure: Measure,
    rule: ExchangeRule = ExchangeRule.PROSE,
    centers: Optional[dict[str, np.ndarray]] = None,
) -> str:
    """
    The class of `own` to exchange next.

    Under N2 with the prose rule the lowest centroid ratio wins; every other
    combination takes the highest score. Ties go to the lowest class index.
    """
    scores = group_scores(d, own, other, measure, centers)
    pick_minimum = Measure(measure) is Measure.N2 and ExchangeRule(rule) is ExchangeRule.PROSE
    sign = 1.0 if pick_minimum else -1.0
    return min(scores, key=lambda k: (sign * scores[k], d.class_index(k)))


def exchange(
    d: Dataset, g1: Sequence[str], g2: Sequence[str], a1: str, a2: str
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Move a1 from g1 to g2 and a2 from g2 to g1."""
    new_g1 = [c for c in g1 if c != a1] + [a2]
    new_g2 = [c for c in g2 if c != a2] + [a1]
    return _ordered(d, new_g1), _ordered(d, new_g2)


def _split_index(d: Dataset, g1: Sequence[str], g2: Sequence[str], measure: Measure) -> ComplexityIndex:
    return complexity_index(binary_view(d, g1, g2), measure)


def _random_halves(d: Dataset, classes: tuple[str, ...], seed: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    order = np.random.default_rng(seed).permutation(len(classes))
    n_first = math.ceil(len(classes) / 2)
    g1 = _ordered(d, (classes[i] for i in order[:n_first]))
    g2 = _ordered(d, (classes[i] for i in order[n_first:]))
    return g1, g2


def _search_from(
    d: Dataset,
    g1: tuple[str, ...],
    g2: tuple[str, ...],
    measure: Measure,
    rule: ExchangeRule,
    centers: dict[str, np.ndarray],
) -> PartitionState:
    current = _split_index(d, g1, g2, measure)
    trace, history = [current.value], [(g1, g2)]
    while True:
        a1 = most_complex_class(d, g1, g2, measure, rule, centers)
        a2 = most_complex_class(d, g2, g1, measure, rule, centers)
        new_g1, new_g2 = exchange(d, g1, g2, a1, a2)
        candidate = _split_index(d, new_g1, new_g2, measure)
        if not candidate.value < current.value:
            logger.debug(
                f"Exchange {a1}<->{a2} rejected ({candidate.value:.6g} >= {current.value:.6g})")
            break
        logger.debug(f"Exchange {a1}<->{a2} accepted: {current.value:.6g} -> {candidate.value:.6g}")
        g1, g2, current = new_g1, new_g2, candidate
        trace.append(current.value)
        history.append((g1, g2))
    return PartitionState(g1=g1, g2=g2, index=current, trace=tuple(trace), history=tuple(history))


def local_search_split(
    d: Dataset,
    classes: Iterable[str],
    measure: Measure,
    seed: int,
    rule: ExchangeRule = ExchangeRule.PROSE,
    restarts: int = 1,
    initial: Optional[tuple[Sequence[str], Sequence[str]]] = None,
) -> PartitionState:
    """
    Split `classes` into two groups of lower complexity by class exchange.

    Starts from a random near-equal split (first group one larger when the
    count is odd), then repeatedly swaps the most complex class of each
    group, keeping the swap only when the complexity strictly drops. Stops
    at the first swap that does not improve.

    Args:
        d: Training data.
        classes: Classes at this tree node (at least 2).
        measure: N2 or N3.
        seed: Seed of the random initial split.
        rule: Exchange-candidate rule for N2.
        restarts: Number of seeded runs; the lowest final index wins and ties
            keep the earliest run.
        initial: Explicit starting partition; replaces the random draw and
            makes `restarts` irrelevant.

    Returns:
        The final PartitionState.

    Raises:
        ValueError: If fewer than 2 classes are given or restarts < 1.
        DegenerateGeometryError: Propagated from the centroid ratio.
    """
    classes = _ordered(d, classes)
    if len(classes) < 2:
        raise ValueError(f"a split needs at least 2 classes, got {list(classes)}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    centers = {c.name: c.center for c in class_centroids(d, classes)}

    if initial is not None:
        g1, g2 = _ordered(d, initial[0]), _ordered(d, initial[1])
        if set(g1) | set(g2) != set(classes) or set(g1) & set(g2):
            raise ValueError("initial partition must split exactly the given classes")
        return _search_from(d, g1, g2, measure, rule, centers)

    best: Optional[PartitionState] = None
    for run in range(restarts):
        run_seed = seed if run == 0 else derive_seed(seed, run)
        g1, g2 = _random_halves(d, classes, run_seed)
        state = _search_from(d, g1, g2, measure, rule, centers)
        if best is None or state.index.value < best.index.value:
            best = state
    return best


def balanced_initial_splits(classes: Sequence[str]) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """
    Every way to split `classes` into sizes ceil(n/2) / floor(n/2), each
    unordered partition listed once, in the given class order.
    """
    classes = tuple(classes)
    n_first = math.ceil(len(classes) / 2)
    splits = []
    for chosen in itertools.combinations(range(len(classes)), n_first):
        if n_first * 2 == len(classes) and 0 not in chosen:
            continue
        g1 = tuple(classes[i] for i in chosen)
        g2 = tuple(c for i, c in enumerate(classes) if i not in chosen)
        splits.append((g1, g2))
    return splits


def search_all_starts(
    d: Dataset,
    classes: Iterable[str],
    measure: Measure,
    rule: ExchangeRule = ExchangeRule.PROSE,
) -> PartitionState:
    """
    Run the local search from every balanced initial split and keep the
    lowest final index (earliest on ties).

    Exchanges preserve group sizes, so this attains the minimum over all
    balanced bipartitions.
    """
    classes = _ordered(d, classes)
    best: Optional[PartitionState] = None
    for initial in balanced_initial_splits(classes):
        state = local_search_split(d, classes, measure, seed=0, rule=rule, initial=initial)
        if best is None or state.index.value < best.index.value:
            best = state
    return best


def is_local_minimum(
    d: Dataset,
    state: PartitionState,
    measure: Measure,
    rule: ExchangeRule = ExchangeRule.PROSE,
) -> bool:
    """True if the prescribed exchange from `state` does not lower its index."""
    centers = {c.name: c.center for c in class_centroids(d, state.classes)}
    a1 = most_complex_class(d, state.g1, state.g2, measure, rule, centers)
    a2 = most_complex_class(d, state.g2, state.g1, measure, rule, centers)
    new_g1, new_g2 = exchange(d, state.g1, state.g2, a1, a2)
    return not _split_index(d, new_g1, new_g2, measure).value < state.index.value


def ecocecs_encode(
    d: Dataset,
    measure: Measure,
    seed: int,
    rule: ExchangeRule = ExchangeRule.PROSE,
    restarts: int = 1,
) -> CodingMatrix:
    """
    Build the complexity-driven tree code for `d`.

    The root splits all classes; every group with two or more classes is
    split again with a seed derived from its parent's seed and its node id.
    Columns follow pre-order traversal, so there are exactly R-1 of them.

    Args:
        d: Training data with every class present.
        measure: N2 or N3.
        seed: Root seed.
        rule: Exchange-candidate rule (see ExchangeRule).
        restarts: Local-search restarts per node.

    Returns:
        CodingMatrix whose column_meta records each node's search.
    """
    d.check_complete()
    measure = Measure(measure)
    columns: list[np.ndarray] = []
    meta: list[ColumnMeta] = []

    def grow(classes: tuple[str, ...], node_seed: int, parent_id: Optional[int]) -> None:
        node_id = len(columns)
        state = local_search_split(d, classes, measure, node_seed, rule, restarts)
        column = np.zeros(d.n_classes, dtype=np.int8)
        column[[d.class_index(c) for c in state.g1]] = 1
        column[[d.class_index(c) for c in state.g2]] = -1
        columns.append(column)
        meta.append(ColumnMeta(
            node_id=node_id,
            parent_id=parent_id,
            measure=measure,
            index=state.index.value,
            trace=state.trace,
            history=state.history,
        ))
        logger.info(
            f"Node {node_id}: {'/'.join(state.g1)} vs {'/'.join(state.g2)} "
            f"{measure.value}={state.index.value:.4g} after {state.exchanges} exchanges")
        for group in (state.g1, state.g2):
            if len(group) >= 2:
                grow(group, derive_seed(node_seed, len(columns)), node_id)

    grow(d.class_names, seed, None)
    matrix = CodingMatrix(
        entries=np.column_stack(columns),
        class_order=d.class_names,
        column_meta=tuple(meta),
    )
    matrix.validate()
    return matrix


def _class_order(R: int, class_order: Optional[Sequence[str]]) -> tuple[str, ...]:
    if R < 2:
        raise ValueError(f"a coding matrix needs R>=2 classes, got R={R}")
    if class_order is None:
        return tuple(f"c{k + 1}" for k in range(R))
    if len(class_order) != R:
        raise ValueError(f"{len(class_order)} class names for R={R}")
    return tuple(class_order)


def ova_matrix(R: int, class_order: Optional[Sequence[str]] = None) -> CodingMatrix:
    """One-vs-all: column j is +1 for class j and -1 for the rest."""
    order = _class_order(R, class_order)
    return CodingMatrix(entries=2 * np.eye(R, dtype=np.int8) - 1, class_order=order)


def ovo_matrix(R: int, class_order: Optional[Sequence[str]] = None) -> CodingMatrix:
    """One-vs-one: one column per class pair (i < j), +1 for i, -1 for j."""
    order = _class_order(R, class_order)
    pairs = list(itertools.combinations(range(R), 2))
    entries = np.zeros((R, len(pairs)), dtype=np.int8)
    for j, (first, second) in enumerate(pairs):
        entries[first, j] = 1
        entries[second, j] = -1
    return CodingMatrix(entries=entries, class_order=order)


def ordinal_matrix(R: int, class_order: Optional[Sequence[str]] = None) -> CodingMatrix:
    """Ordinal code: column j is -1 for the first j classes, +1 after."""
    order = _class_order(R, class_order)
    rows = np.arange(R)[:, None]
    cols = np.arange(1, R)[None, :]
    return CodingMatrix(entries=np.where(rows < cols, -1, 1).astype(np.int8), class_order=order)


def build_matrix(
    encoder: EncoderName,
    d: Dataset,
    seed: int,
    rule: ExchangeRule = ExchangeRule.PROSE,
    restarts: int = 1,
) -> CodingMatrix:
    """Coding matrix for `d` from any of the supported encoders."""
    encoder = EncoderName(encoder)
    if encoder is EncoderName.ECOCECS_N2:
        return ecocecs_encode(d, Measure.N2, seed, rule, restarts)
    if encoder is EncoderName.ECOCECS_N3:
        return ecocecs_encode(d, Measure.N3, seed, rule, restarts)
    baseline = {
        EncoderName.OVA: ova_matrix,
        EncoderName.OVO: ovo_matrix,
        EncoderName.ORDINAL: ordinal_matrix,
    }[encoder]
    matrix = baseline(d.n_classes, d.class_names)
    logger.info(f"Built {encoder.value} matrix with {matrix.n_columns} columns")
    return matrix


def write_matrix_csv(m: CodingMatrix, path: str | Path) -> None:
    """Class names as row headers, columns c1..cL."""
    frame = pd.DataFrame(
        m.entries.astype(int),
        index=pd.Index(m.class_order, name="class"),
        columns=[f"c{j + 1}" for j in range(m.n_columns)],
    )
    frame.to_csv(path, encoding="utf-8", lineterminator="\n")


def read_matrix_csv(path: str | Path) -> CodingMatrix:
    frame = pd.read_csv(path, index_col=0, dtype={"class": str}, encoding="utf-8")
    return CodingMatrix(
        entries=frame.to_numpy(dtype=np.int8),
        class_order=tuple(str(c) for c in frame.index),
    )


def write_column_meta_csv(m: CodingMatrix, path: str | Path) -> None:
    rows = [
        {
            "column": f"c{j + 1}",
            "node_id": meta.node_id,
            "parent_id": "" if meta.parent_id is None else meta.parent_id,
            "measure": "" if meta.measure is None else meta.measure.value,
            "index": "" if meta.index is None else repr(meta.index),
            "exchanges": max(len(meta.trace) - 1, 0),
        }
        for j, meta in enumerate(m.column_meta)
    ]
    pd.DataFrame(rows).to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def trace_rows(m: CodingMatrix) -> list[dict]:
    """One row per accepted partition of every node: node id, step, index, groups."""
    rows = []
    for meta in m.column_meta:
        for step, (value, (g1, g2)) in enumerate(zip(meta.trace, meta.history)):
            rows.append({
                "node_id": meta.node_id,
                "step": step,
                "index": repr(value),
                "group_pos": "|".join(g1),
                "group_neg": "|".join(g2),
            })
    return rows


def write_trace_csv(m: CodingMatrix, path: str | Path) -> None:
    columns = ["node_id", "step", "index", "group_pos", "group_neg"]
    pd.DataFrame(trace_rows(m), columns=columns).to_csv(
        path, index=False, encoding="utf-8", lineterminator="\n")
