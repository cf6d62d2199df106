import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutremain.errors import ShapeMismatchError, UndefinedMetricError
from cutremain.metrics import (
    PredictionSet,
    auc_roc,
    average_precision,
    cosine_distance,
    euclidean_distance,
    f1,
    macro_f1,
    multilabel_suite,
    pairwise_feature_report,
    per_class_f1,
)

from oracles import (
    ap_rank_walk,
    auc_pairwise,
    cf1_averaged,
    euclidean_loop,
    of1_pooled,
)


class TestAucRoc:
    def test_perfect_separation(self):
        assert auc_roc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0

    def test_perfect_inversion(self):
        assert auc_roc([0.2, 0.3, 0.8, 0.9], [1, 1, 0, 0]) == 0.0

    def test_worked_value_confirmed_by_oracle(self):
        scores, labels = [0.9, 0.6, 0.4, 0.2], [1, 0, 1, 0]
        oracle = auc_pairwise(scores, labels)
        assert oracle == 0.75  # the frozen regression constant
        assert auc_roc(scores, labels) == oracle

    def test_single_class_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc_roc([0.1, 0.2], [1, 1])

    def test_matches_pairwise_oracle_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 60))
            # Coarse score grid to force plenty of ties.
            scores = rng.integers(0, 5, size=n) / 4.0
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                continue
            assert auc_roc(scores, labels) == pytest.approx(
                auc_pairwise(scores, labels), abs=1e-12
            )

    @given(st.lists(st.integers(-100, 100), min_size=4, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_invariant_under_monotone_transform(self, raw):
        labels = [i % 2 for i in range(len(raw))]
        scores = np.asarray(raw, dtype=np.float64)
        # Strictly increasing and exact on this integer range, so the tie
        # structure is preserved bit-for-bit.
        transformed = scores**3 + 5.0
        assert auc_roc(scores, labels) == pytest.approx(auc_roc(transformed, labels), abs=1e-12)

    def test_negated_scores_complement_without_ties(self):
        rng = np.random.default_rng(1)
        scores = rng.permutation(20) / 20.0  # all distinct
        labels = rng.integers(0, 2, size=20)
        labels[0], labels[1] = 0, 1
        total = auc_roc(scores, labels) + auc_roc(-scores, labels)
        assert total == pytest.approx(1.0, abs=1e-12)


class TestF1:
    def test_identity_predictions(self):
        assert f1([1, 0, 1], [1, 0, 1]) == 1.0

    def test_balanced_errors(self):
        # TP=1, FP=1, FN=1
        assert f1([1, 1, 0], [1, 0, 1]) == 0.5

    def test_no_predicted_positives(self):
        assert f1([0, 0, 0], [1, 1, 0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            f1([1, 0], [1, 0, 1])

    def test_macro_averages_per_class(self):
        preds = [0, 1, 2, 1]
        labels = [0, 1, 1, 1]
        per = per_class_f1(preds, labels, 3)
        assert macro_f1(preds, labels, 3) == pytest.approx(sum(per) / 3)


class TestAveragePrecision:
    def test_worked_value_confirmed_by_oracle(self):
        scores, labels = [0.9, 0.8, 0.7], [1, 0, 1]
        oracle = ap_rank_walk(scores, labels)
        assert oracle == pytest.approx(5 / 6)  # the frozen regression constant
        assert average_precision(scores, labels) == pytest.approx(oracle, abs=1e-12)

    def test_needs_a_positive(self):
        with pytest.raises(UndefinedMetricError):
            average_precision([0.5, 0.4], [0, 0])

    def test_matches_rank_walk_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(2, 80))
            scores = rng.integers(0, 10, size=n) / 9.0
            labels = rng.integers(0, 2, size=n)
            if labels.sum() == 0:
                continue
            assert average_precision(scores, labels) == pytest.approx(
                ap_rank_walk(list(scores), list(labels)), abs=1e-12
            )


class TestMultilabelSuite:
    def test_perfect_ranking_scores_one(self):
        scores = np.array([[0.9, 0.8], [0.8, 0.9], [0.1, 0.2], [0.2, 0.1]])
        labels = np.array([[1, 1], [1, 1], [0, 0], [0, 0]])
        report = multilabel_suite(PredictionSet(scores, labels))
        assert report.map == 1.0
        assert report.cf1 == 1.0
        assert report.of1 == 1.0

    def test_identical_class_counts_make_cf1_equal_of1(self):
        scores = np.array([[0.9, 0.9], [0.2, 0.2], [0.7, 0.7], [0.4, 0.4]])
        labels = np.array([[1, 1], [0, 0], [0, 0], [1, 1]])
        report = multilabel_suite(PredictionSet(scores, labels))
        assert report.cf1 == pytest.approx(report.of1, abs=1e-12)

    def test_matches_count_oracles(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            n = int(rng.integers(2, 100))
            k = int(rng.integers(2, 8))
            scores = rng.random((n, k))
            labels = rng.integers(0, 2, size=(n, k))
            preds = PredictionSet(scores, labels)
            report = multilabel_suite(preds)
            assert report.of1 == pytest.approx(of1_pooled(scores, labels, 0.5), abs=1e-12)
            assert report.cf1 == pytest.approx(cf1_averaged(scores, labels, 0.5), abs=1e-12)

    def test_all_negative_class_excluded_and_reported(self):
        scores = np.array([[0.9, 0.1], [0.2, 0.3], [0.8, 0.2]])
        labels = np.array([[1, 0], [0, 0], [1, 0]])
        report = multilabel_suite(PredictionSet(scores, labels))
        assert report.excluded_classes == (1,)
        assert report.per_class_ap[1] is None
        assert report.map == pytest.approx(ap_rank_walk([0.9, 0.2, 0.8], [1, 0, 1]))

    def test_index_labels_expand_to_one_hot(self):
        scores = np.array([[0.9, 0.1], [0.1, 0.9]])
        preds = PredictionSet(scores, np.array([0, 1]))
        assert multilabel_suite(preds).map == 1.0


class TestDistances:
    def test_euclidean_self_distance(self):
        assert euclidean_distance([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_pythagorean(self):
        assert euclidean_distance([0, 0], [3, 4]) == 5.0

    def test_euclidean_matches_loop_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            d = int(rng.integers(1, 40))
            u, v = rng.normal(size=d), rng.normal(size=d)
            expected = euclidean_loop(u, v)
            assert euclidean_distance(u, v) == pytest.approx(expected, rel=1e-12)

    def test_cosine_parallel_and_orthogonal(self):
        assert cosine_distance([2.0, 0.0], [5.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
        assert cosine_distance([1, 0], [0, 1]) == pytest.approx(1.0)

    def test_cosine_worked_value(self):
        assert cosine_distance([1, 0], [1, 1]) == pytest.approx(1 - 1 / math.sqrt(2))

    def test_cosine_scale_invariance(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            u, v = rng.normal(size=8), rng.normal(size=8)
            base = cosine_distance(u, v)
            assert cosine_distance(3.7 * u, v) == pytest.approx(base, abs=1e-12)
            assert cosine_distance(u, 0.04 * v) == pytest.approx(base, abs=1e-12)

    def test_zero_norm_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            cosine_distance([0.0, 0.0], [1.0, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            euclidean_distance([1, 2], [1, 2, 3])


class TestPairwiseFeatureReport:
    def test_identical_lists_are_zero(self):
        vectors = [[1.0, 2.0], [3.0, 4.0]]
        report = pairwise_feature_report(vectors, vectors)
        assert (report.euclidean_mean, report.euclidean_std) == (0.0, 0.0)
        assert report.cosine_mean == pytest.approx(0.0, abs=1e-12)
        assert report.cosine_std == pytest.approx(0.0, abs=1e-12)

    def test_two_pair_mean_and_population_std(self):
        originals = [[0.0, 0.0], [0.0, 0.0]]
        augmented = [[3.0, 0.0], [5.0, 0.0]]
        # Cosine needs non-zero norms; shift both sides identically.
        originals = [[1.0, 0.0], [1.0, 0.0]]
        augmented = [[4.0, 0.0], [6.0, 0.0]]
        report = pairwise_feature_report(originals, augmented)
        assert report.euclidean_mean == 4.0
        assert report.euclidean_std == 1.0

    def test_single_pair_std_is_zero(self):
        report = pairwise_feature_report([[1.0, 2.0]], [[2.0, 2.0]])
        assert report.euclidean_std == 0.0
        assert report.pairs == 1

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            pairwise_feature_report([[1.0]], [[1.0], [2.0]])
