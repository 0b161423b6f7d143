"""
Tests for the exchange local search, the tree encoder and the baseline codes.
"""

import itertools

import numpy as np
import pytest

from src.complexity import ComplexityIndex, Measure, complexity_index
from src.data_model import Dataset, binary_view, generate_blobs
from src.encoder import (
    CodingMatrix,
    EncoderName,
    ExchangeRule,
    PartitionState,
    balanced_initial_splits,
    build_matrix,
    derive_seed,
    ecocecs_encode,
    exchange,
    is_local_minimum,
    local_search_split,
    most_complex_class,
    ordinal_matrix,
    ova_matrix,
    ovo_matrix,
    read_matrix_csv,
    search_all_starts,
    trace_rows,
    write_column_meta_csv,
    write_matrix_csv,
    write_trace_csv,
)


def clustered(centers, per_class=6, spread=0.05, seed=0, names=None):
    """Gaussian classes around explicit 2-D centres."""
    rng = np.random.default_rng(seed)
    names = names or [chr(ord("A") + k) for k in range(len(centers))]
    blocks = [rng.normal(center, spread, size=(per_class, 2)) for center in centers]
    return Dataset(
        samples=np.vstack(blocks),
        labels=tuple(name for name in names for _ in range(per_class)),
        class_names=tuple(names),
    )


def all_bipartitions(classes):
    """Every unordered split of `classes` into two non-empty groups."""
    first, rest = classes[0], classes[1:]
    for size in range(len(rest) + 1):
        for chosen in itertools.combinations(rest, size):
            g1 = (first, *chosen)
            g2 = tuple(c for c in rest if c not in chosen)
            if g2:
                yield g1, g2


def split_value(d, g1, g2, measure):
    return complexity_index(binary_view(d, g1, g2), measure).value


def as_partition(g1, g2):
    return {frozenset(g1), frozenset(g2)}


class TestPartitionState:
    def test_rejects_increasing_trace(self):
        with pytest.raises(ValueError, match="strictly decreasing"):
            PartitionState(
                g1=("a",), g2=("b",),
                index=ComplexityIndex(kind=Measure.N2, value=0.5),
                trace=(0.4, 0.5),
            )

    def test_rejects_overlap(self):
        with pytest.raises(ValueError, match="disjoint"):
            PartitionState(
                g1=("a",), g2=("a", "b"),
                index=ComplexityIndex(kind=Measure.N2, value=0.5),
                trace=(0.5,),
            )

    def test_exchange_count(self):
        state = PartitionState(
            g1=("a",), g2=("b",),
            index=ComplexityIndex(kind=Measure.N3, value=0.1),
            trace=(0.3, 0.2, 0.1),
        )
        assert state.exchanges == 2
        assert state.classes == ("a", "b")


class TestExchangeStep:
    """Candidate choice and the swap itself."""

    @pytest.fixture
    def line(self):
        # A and B close together, C far away
        return clustered([(0.0, 0.0), (1.0, 0.0), (10.0, 0.0)])

    def test_exchange_swaps_and_orders(self, line):
        assert exchange(line, ("A", "C"), ("B",), "C", "B") == (("A", "B"), ("C",))

    def test_rules_pick_opposite_ends(self):
        d = clustered([(0.0, 0.0), (0.5, 0.0), (10.0, 0.0), (10.5, 0.0)])
        own, other = ("A", "C"), ("B", "D")
        assert most_complex_class(d, own, other, Measure.N2, ExchangeRule.PROSE) == "A"
        assert most_complex_class(d, own, other, Measure.N2, ExchangeRule.PSEUDOCODE) == "C"

    def test_n3_picks_largest_within_group_sum(self, line):
        # A and C have equal sums inside {A, C}; the tie goes to the lower class index
        assert most_complex_class(line, ("A", "C"), ("B",), Measure.N3) == "A"
        assert most_complex_class(line, ("C", "A"), ("B",), Measure.N3) == "A"

    def test_balanced_initial_splits(self):
        assert balanced_initial_splits(["a", "b", "c", "d"]) == [
            (("a", "b"), ("c", "d")),
            (("a", "c"), ("b", "d")),
            (("a", "d"), ("b", "c")),
        ]
        assert len(balanced_initial_splits(["a", "b", "c", "d", "e"])) == 10

    def test_derive_seed(self):
        assert derive_seed(3, 1) == derive_seed(3, 1)
        assert derive_seed(3, 1) != derive_seed(3, 2)
        assert derive_seed(3, 1) != derive_seed(4, 1)


class TestLocalSearch:
    """The exchange-based split search."""

    def test_two_classes_stop_immediately(self):
        d = generate_blobs(2, 5, 3, 3, 0.5, seed=1)
        for measure in Measure:
            state = local_search_split(d, d.class_names, measure, seed=0)
            assert state.exchanges == 0
            assert len(state.trace) == 1
            assert as_partition(state.g1, state.g2) == as_partition(["c1"], ["c2"])

    @pytest.mark.parametrize("rule", list(ExchangeRule))
    def test_paired_clusters_are_regrouped(self, rule):
        d = clustered([(0.0, 0.0), (0.5, 0.0), (10.0, 0.0), (10.5, 0.0)])
        state = local_search_split(d, d.class_names, Measure.N2, seed=0, rule=rule, initial=(("A", "C"), ("B", "D")))
        assert as_partition(state.g1, state.g2) == as_partition(["A", "B"], ["C", "D"])
        assert state.exchanges == 1
        assert state.history[0] == (("A", "C"), ("B", "D"))
        assert is_local_minimum(d, state, Measure.N2, rule)

        values = [split_value(d, g1, g2, Measure.N2) for g1, g2 in all_bipartitions(list(d.class_names))]
        assert len(values) == 7
        assert state.index.value == pytest.approx(min(values), abs=1e-12)

    def test_n3_trace_reaches_zero_after_one_exchange(self):
        d = clustered(
            [(10.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
            per_class=15, spread=0.5, seed=4, names=["X", "A", "B"],
        )
        state = local_search_split(d, d.class_names, Measure.N3, seed=0, initial=(("X", "A"), ("B",)))
        assert state.trace[0] > 0
        assert state.trace[-1] == 0.0
        assert state.exchanges == 1
        assert as_partition(state.g1, state.g2) == as_partition(["A", "B"], ["X"])

    def test_n2_trace_drops_over_several_exchanges(self):
        found = False
        for data_seed, search_seed, rule in itertools.product(range(30), range(10), list(ExchangeRule)):
            d = generate_blobs(6, 10, 6, 6, 0.6, seed=data_seed)
            state = local_search_split(d, d.class_names, Measure.N2, search_seed, rule)
            if state.exchanges >= 2 and state.trace[-1] / state.trace[0] <= 0.9:
                found = True
                break
        assert found

    def test_traces_decrease_and_end_at_local_minimum(self):
        for config in range(100):
            R = 3 + config % 6
            measure = Measure.N2 if config % 2 == 0 else Measure.N3
            rule = ExchangeRule.PROSE if config % 4 < 2 else ExchangeRule.PSEUDOCODE
            d = generate_blobs(R, 5, 4, 4, 0.6, seed=config)
            state = local_search_split(d, d.class_names, measure, seed=config, rule=rule)
            assert all(b < a for a, b in zip(state.trace, state.trace[1:]))
            assert state.trace[-1] == state.index.value
            assert len(state.g1) == (R + 1) // 2
            assert is_local_minimum(d, state, measure, rule)

    @pytest.mark.parametrize("R", [4, 5])
    @pytest.mark.parametrize("measure", list(Measure))
    def test_bounded_by_brute_force_minimum(self, R, measure):
        """
        A single search never beats the global minimum, and searching from
        every ceil/floor-size start reaches the minimum over balanced
        bipartitions. Exchanges never change group sizes, so the balanced
        minimum is the best any exchange search can reach.
        """
        for seed in range(5):
            d = generate_blobs(R, 6, 3, 3, 0.7, seed=100 + seed)
            classes = list(d.class_names)
            partitions = list(all_bipartitions(classes))
            assert len(partitions) == 2 ** (R - 1) - 1
            values = {p: split_value(d, *p, measure) for p in partitions}
            global_minimum = min(values.values())
            balanced_minimum = min(v for (g1, g2), v in values.items() if abs(len(g1) - len(g2)) <= 1)

            state = local_search_split(d, classes, measure, seed=seed)
            assert state.index.value >= global_minimum - 1e-12

            best = search_all_starts(d, classes, measure)
            assert best.index.value == pytest.approx(balanced_minimum, abs=1e-12)
            assert values[next(p for p in partitions if as_partition(*p) == as_partition(best.g1, best.g2))] == \
                pytest.approx(best.index.value, abs=1e-12)

    def test_restarts_never_worse(self):
        d = generate_blobs(6, 6, 4, 4, 0.7, seed=9)
        single = local_search_split(d, d.class_names, Measure.N2, seed=5)
        several = local_search_split(d, d.class_names, Measure.N2, seed=5, restarts=4)
        assert several.index.value <= single.index.value

    def test_invalid_arguments(self):
        d = generate_blobs(3, 4, 2, 2, 0.5, seed=0)
        with pytest.raises(ValueError, match="at least 2 classes"):
            local_search_split(d, ["c1"], Measure.N2, seed=0)
        with pytest.raises(ValueError, match="restarts"):
            local_search_split(d, d.class_names, Measure.N2, seed=0, restarts=0)
        with pytest.raises(ValueError, match="initial partition"):
            local_search_split(d, d.class_names, Measure.N2, seed=0, initial=(("c1",), ("c2",)))


class TestEcocecsEncode:
    """Tree-structured coding matrices."""

    def test_two_classes(self):
        d = generate_blobs(2, 5, 3, 3, 0.5, seed=0)
        matrix = ecocecs_encode(d, Measure.N2, seed=0)
        assert matrix.entries.shape == (2, 1)
        assert sorted(matrix.column(0).tolist()) == [-1, 1]

    @pytest.mark.parametrize("measure", list(Measure))
    def test_three_classes(self, measure):
        d = generate_blobs(3, 5, 3, 3, 0.5, seed=0)
        matrix = ecocecs_encode(d, measure, seed=0)
        assert matrix.n_columns == 2
        assert np.count_nonzero(matrix.column(0) == 0) == 0
        assert np.count_nonzero(matrix.column(1) == 0) == 1

    @pytest.mark.parametrize("seed", range(10))
    def test_five_class_tree_structure(self, seed):
        d = generate_blobs(5, 5, 4, 4, 0.5, seed=seed)
        matrix = ecocecs_encode(d, Measure.N2, seed=seed)
        matrix.validate()
        assert matrix.n_columns == 4
        assert matrix.column_meta[0].parent_id is None
        for j, meta in enumerate(matrix.column_meta):
            assert meta.node_id == j
            assert meta.index == meta.trace[-1]
            if meta.parent_id is not None:
                assert meta.parent_id < j
                parent_groups = {matrix.positive(meta.parent_id), matrix.negative(meta.parent_id)}
                assert matrix.node_classes(j) in parent_groups
        # a class is active exactly on the columns of the nodes above its leaf
        for r, name in enumerate(matrix.class_order):
            active = [j for j in range(matrix.n_columns) if matrix.entries[r, j] != 0]
            assert all(name in matrix.node_classes(j) for j in active)
            assert active[0] == 0

    def test_deterministic(self):
        d = generate_blobs(6, 5, 4, 4, 0.6, seed=3)
        first = ecocecs_encode(d, Measure.N3, seed=11)
        second = ecocecs_encode(d, Measure.N3, seed=11)
        np.testing.assert_array_equal(first.entries, second.entries)
        assert [m.trace for m in first.column_meta] == [m.trace for m in second.column_meta]

    def test_incomplete_dataset_rejected(self):
        d = Dataset(samples=np.zeros((2, 1)), labels=("a", "b"), class_names=("a", "b", "c"))
        with pytest.raises(ValueError):
            ecocecs_encode(d, Measure.N2, seed=0)


class TestBaselines:
    def test_ova(self):
        assert ova_matrix(3).entries.tolist() == [[1, -1, -1], [-1, 1, -1], [-1, -1, 1]]

    def test_ovo(self):
        matrix = ovo_matrix(3)
        assert matrix.n_columns == 3
        for j in range(3):
            assert sorted(matrix.column(j).tolist()) == [-1, 0, 1]

    def test_ordinal(self):
        assert ordinal_matrix(4).entries.tolist() == [
            [-1, -1, -1],
            [1, -1, -1],
            [1, 1, -1],
            [1, 1, 1],
        ]

    def test_class_names(self):
        assert ova_matrix(2).class_order == ("c1", "c2")
        assert ova_matrix(2, ["x", "y"]).class_order == ("x", "y")
        with pytest.raises(ValueError):
            ova_matrix(3, ["x", "y"])
        with pytest.raises(ValueError):
            ovo_matrix(1)


class TestCodingMatrixInvariants:
    """Structural guarantees of every encoder."""

    @pytest.mark.parametrize("R", range(2, 13))
    def test_all_encoders(self, R):
        d = generate_blobs(R, 4, 4, 4, 0.5, seed=R)
        expected_columns = {
            EncoderName.ECOCECS_N2: R - 1,
            EncoderName.ECOCECS_N3: R - 1,
            EncoderName.OVA: R,
            EncoderName.OVO: R * (R - 1) // 2,
            EncoderName.ORDINAL: R - 1,
        }
        for encoder, n_columns in expected_columns.items():
            matrix = build_matrix(encoder, d, seed=0)
            matrix.validate()
            assert matrix.n_columns == n_columns
            assert matrix.class_order == d.class_names
            assert np.isin(matrix.entries, (-1, 0, 1)).all()
            assert np.unique(matrix.entries, axis=0).shape[0] == R

    def test_identical_rows_rejected(self):
        with pytest.raises(ValueError, match="identical rows"):
            CodingMatrix(entries=np.array([[1], [1], [-1]]), class_order=("a", "b", "c")).validate()

    def test_single_polarity_column_rejected(self):
        with pytest.raises(ValueError, match="both a \\+1 and a -1"):
            CodingMatrix(entries=np.array([[1, 1], [-1, 1]]), class_order=("a", "b")).validate()

    def test_zero_row_rejected(self):
        with pytest.raises(ValueError, match="all-zero"):
            CodingMatrix(entries=np.array([[1], [-1], [0]]), class_order=("a", "b", "c")).validate()

    def test_entries_outside_ternary_rejected(self):
        with pytest.raises(ValueError):
            CodingMatrix(entries=np.array([[2], [-1]]), class_order=("a", "b"))


class TestSerialization:
    def test_matrix_csv(self, tmp_path):
        d = generate_blobs(4, 5, 3, 3, 0.5, seed=2)
        matrix = ecocecs_encode(d, Measure.N2, seed=2)
        path = tmp_path / "matrix.csv"
        write_matrix_csv(matrix, path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "class,c1,c2,c3"
        loaded = read_matrix_csv(path)
        np.testing.assert_array_equal(loaded.entries, matrix.entries)
        assert loaded.class_order == matrix.class_order

    def test_trace_and_meta_files(self, tmp_path):
        d = generate_blobs(5, 5, 3, 3, 0.6, seed=2)
        matrix = ecocecs_encode(d, Measure.N3, seed=2)
        rows = trace_rows(matrix)
        assert len(rows) == sum(len(m.trace) for m in matrix.column_meta)
        assert {row["node_id"] for row in rows} == {0, 1, 2, 3}

        write_trace_csv(matrix, tmp_path / "trace.csv")
        write_column_meta_csv(matrix, tmp_path / "meta.csv")
        trace_lines = (tmp_path / "trace.csv").read_text(encoding="utf-8").splitlines()
        assert trace_lines[0] == "node_id,step,index,group_pos,group_neg"
        assert len(trace_lines) == len(rows) + 1
        meta_lines = (tmp_path / "meta.csv").read_text(encoding="utf-8").splitlines()
        assert meta_lines[0] == "column,node_id,parent_id,measure,index,exchanges"
        assert len(meta_lines) == 5

    def test_baseline_trace_is_empty(self, tmp_path):
        write_trace_csv(ova_matrix(3), tmp_path / "trace.csv")
        assert (tmp_path / "trace.csv").read_text(encoding="utf-8").splitlines() == [
            "node_id,step,index,group_pos,group_neg"]
