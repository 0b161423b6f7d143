"""
Tests for ECOC training, decoding and the end-to-end pipeline.
"""

import configparser
import itertools

import numpy as np
import pytest

from src import ecoc_pipeline
from src.complexity import Measure
from src.data_model import generate_blobs, split_stratified
from src.dichotomizers import LearnerKind, LinearHingeModel, predict_many
from src.ecoc_pipeline import (
    EcocModel,
    codeword_distances,
    decode,
    decode_details,
    fit,
    predict_batch,
    write_models,
    write_predictions_csv,
)
from src.encoder import CodingMatrix, ecocecs_encode, ordinal_matrix, ova_matrix
from src.feature_selection import FilterMethod, select_top_k
from src.metrics import evaluate


def constant_model(matrix, signs, n_features=2):
    """An EcocModel whose column j always outputs signs[j]."""
    return EcocModel(
        matrix=matrix,
        column_models=tuple(LinearHingeModel(weights=np.zeros(n_features), bias=float(s)) for s in signs),
        feature_subset=None,
        n_features=n_features,
    )


@pytest.fixture
def ternary():
    return CodingMatrix(entries=np.array([[1, 1], [1, -1], [-1, 0]]), class_order=("c1", "c2", "c3"))


class TestDecoding:
    """Zero-skipping Hamming decoding."""

    def test_ternary_distances(self, ternary):
        np.testing.assert_allclose(codeword_distances(ternary, np.array([-1, 1])), [0.5, 1.0, 0.0])
        np.testing.assert_allclose(
            codeword_distances(ternary, np.array([-1, 1]), normalized=False), [1.0, 2.0, 0.0])

    def test_ternary_decode(self, ternary):
        assert decode(constant_model(ternary, [-1, 1]), np.zeros(2)) == "c3"

    def test_exact_codeword_match(self, ternary):
        model = constant_model(ternary, [1, -1])
        predicted, codes, distances = decode_details(model, np.zeros((1, 2)))
        assert predicted == ["c2"]
        assert codes.tolist() == [[1, -1]]
        assert distances[0, 1] == 0.0

    def test_ova_row_match(self):
        assert decode(constant_model(ova_matrix(3), [1, -1, -1]), np.zeros(2)) == "c1"

    def test_ties_go_to_lowest_class(self):
        assert decode(constant_model(ova_matrix(3), [-1, -1, -1]), np.zeros(2)) == "c1"
        assert decode(constant_model(ova_matrix(3), [-1, 1, 1]), np.zeros(2)) == "c2"

    @pytest.mark.parametrize("matrix", [ova_matrix(4), ordinal_matrix(4)])
    def test_normalization_keeps_ranking_for_equal_row_weights(self, matrix):
        for signs in itertools.product([-1, 1], repeat=matrix.n_columns):
            normalized = codeword_distances(matrix, np.array(signs))
            raw = codeword_distances(matrix, np.array(signs), normalized=False)
            assert np.argmin(normalized) == np.argmin(raw)

    def test_batch_distances(self, ternary):
        distances = codeword_distances(ternary, np.array([[-1, 1], [1, 1]]))
        assert distances.shape == (2, 3)
        np.testing.assert_allclose(distances[1], [0.0, 0.5, 1.0])

    def test_code_length_mismatch(self, ternary):
        with pytest.raises(ValueError, match="entries"):
            codeword_distances(ternary, np.array([1, 1, 1]))

    def test_dimension_mismatch(self, ternary):
        with pytest.raises(ValueError, match="features"):
            decode(constant_model(ternary, [1, 1]), np.zeros(3))

    def test_empty_batch(self, ternary):
        assert predict_batch(constant_model(ternary, [1, 1]), np.zeros((0, 2))) == []


class TestFit:
    """One dichotomizer per column."""

    def test_two_classes_match_the_single_model(self):
        d = generate_blobs(2, 15, 3, 3, 0.8, seed=3)
        matrix = ecocecs_encode(d, Measure.N2, seed=0)
        model = fit(d, matrix, LearnerKind.GAUSSIAN_NB)
        column = predict_many(model.column_models[0], d.samples)
        expected = [matrix.positive(0)[0] if s == 1 else matrix.negative(0)[0] for s in column]
        assert predict_batch(model, d) == expected

    def test_ova_models_see_every_sample(self, mocker):
        d = generate_blobs(3, 8, 4, 4, 0.5, seed=1)
        spy = mocker.spy(ecoc_pipeline, "train")
        model = fit(d, ova_matrix(3, d.class_names), LearnerKind.GAUSSIAN_NB)
        assert len(model.column_models) == 3
        assert spy.call_count == 3
        assert [len(call.args[1]) for call in spy.call_args_list] == [d.n_samples] * 3

    def test_tree_columns_see_only_their_classes(self, mocker):
        d = generate_blobs(4, 7, 4, 4, 0.5, seed=2)
        matrix = ecocecs_encode(d, Measure.N2, seed=2)
        spy = mocker.spy(ecoc_pipeline, "train")
        fit(d, matrix, LearnerKind.GAUSSIAN_NB)
        assert matrix.n_columns == 3
        sizes = [len(call.args[1]) for call in spy.call_args_list]
        counts = d.class_counts()
        assert sizes == [sum(counts[c] for c in matrix.node_classes(j)) for j in range(3)]
        assert sizes[0] == d.n_samples
        assert sorted(sizes[1:]) == [14, 14]

    def test_column_seeds_differ(self, mocker):
        d = generate_blobs(3, 8, 4, 4, 0.5, seed=1)
        spy = mocker.spy(ecoc_pipeline, "train")
        fit(d, ova_matrix(3, d.class_names), LearnerKind.LINEAR_HINGE, seed=4)
        seeds = [call.args[3] for call in spy.call_args_list]
        assert len(set(seeds)) == 3

    def test_unknown_matrix_class(self):
        d = generate_blobs(3, 5, 2, 2, 0.5, seed=0)
        with pytest.raises(ValueError, match="not in dataset"):
            fit(d, ova_matrix(3, ["c1", "c2", "zz"]), LearnerKind.ONE_NN)

    def test_per_column_selection_needs_method(self):
        d = generate_blobs(3, 5, 4, 2, 0.5, seed=0)
        with pytest.raises(ValueError, match="filter method"):
            fit(d, ova_matrix(3, d.class_names), LearnerKind.ONE_NN, per_column_k=2)

    def test_global_feature_subset(self):
        d = generate_blobs(3, 8, 6, 3, 0.3, seed=4)
        model = fit(d, ova_matrix(3, d.class_names), LearnerKind.GAUSSIAN_NB, feature_subset=[0, 2, 5])
        assert model.feature_subset == (0, 2, 5)
        assert model.n_features == 6
        assert all(m.n_features == 3 for m in model.column_models)
        assert len(predict_batch(model, d)) == d.n_samples

    def test_per_column_features(self):
        d = generate_blobs(4, 8, 10, 4, 0.3, seed=6)
        matrix = ecocecs_encode(d, Measure.N2, seed=6)
        model = fit(
            d, matrix, LearnerKind.GAUSSIAN_NB,
            per_column_k=3, fs_method=FilterMethod.WILCOXON,
        )
        assert len(model.column_features) == matrix.n_columns
        assert all(len(features) == 3 for features in model.column_features)
        assert len(predict_batch(model, d)) == d.n_samples


class TestPredictBatch:
    def test_training_predictions_recover_labels(self):
        d = generate_blobs(5, 6, 4, 4, 0.3, seed=8)
        matrix = ecocecs_encode(d, Measure.N3, seed=8)
        model = fit(d, matrix, LearnerKind.ONE_NN)
        assert predict_batch(model, d) == list(d.labels)

    def test_duplicate_rows_get_duplicate_predictions(self):
        d = generate_blobs(3, 6, 3, 3, 0.6, seed=1)
        model = fit(d, ova_matrix(3, d.class_names), LearnerKind.GAUSSIAN_NB)
        rows = np.vstack([d.samples[4], d.samples[4], d.samples[9]])
        predicted = predict_batch(model, rows)
        assert predicted[0] == predicted[1]
        assert all(p in d.class_names for p in predicted)

    def test_unnormalized_decoding_runs(self):
        d = generate_blobs(4, 6, 3, 3, 0.4, seed=2)
        model = fit(d, ecocecs_encode(d, Measure.N2, seed=2), LearnerKind.ONE_NN)
        assert predict_batch(model, d, normalized=False) == list(d.labels)


class TestOutputs:
    @pytest.fixture
    def fitted(self):
        d = generate_blobs(3, 6, 4, 4, 0.4, seed=3)
        return d, fit(d, ecocecs_encode(d, Measure.N2, seed=3), LearnerKind.GAUSSIAN_NB)

    def test_predictions_csv(self, fitted, tmp_path):
        d, model = fitted
        predicted = write_predictions_csv(model, d, tmp_path / "predictions.csv")
        lines = (tmp_path / "predictions.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "sample,true,predicted,dist_c1,dist_c2,dist_c3"
        assert len(lines) == d.n_samples + 1
        assert lines[1].split(",")[2] == predicted[0]

    def test_models_file(self, fitted, tmp_path):
        d, model = fitted
        write_models(model, tmp_path / "models.txt")
        parser = configparser.ConfigParser(interpolation=None)
        parser.read(tmp_path / "models.txt", encoding="utf-8")
        assert parser.sections() == ["ecoc", "column c1", "column c2"]
        assert parser["ecoc"]["classes"] == "c1 c2 c3"
        assert parser["column c1"]["kind"] == "gaussian_nb"
        assert len(parser["column c2"]["mean_pos"].split()) == 4


class TestEndToEnd:
    def test_separable_five_class_accuracy(self):
        for seed in range(3):
            d = generate_blobs(5, 40, 200, 10, 0.25, seed=seed)
            train, test = split_stratified(d, 0.7, seed=seed)
            selected = select_top_k(train, 80, FilterMethod.WILCOXON)
            matrix = ecocecs_encode(train.select_features(selected), Measure.N2, seed=seed)
            model = fit(train, matrix, LearnerKind.GAUSSIAN_NB, feature_subset=selected)
            report = evaluate(test.labels, predict_batch(model, test), d.class_names)
            assert report.accuracy >= 0.95, f"seed {seed}"
            assert report.fscore >= 0.90, f"seed {seed}"
