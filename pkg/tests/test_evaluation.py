import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deepmne.evaluation import (LinearOvrModel, SkippedLabelWarning, UndefinedMetricError, accuracy, binarize,
                                fold_assignment, kfold_cv, micro_auprc, micro_auroc, micro_f1, predict_scores,
                                read_scores_tsv, score_report, train_ovr, write_scores_tsv)

from oracles import exhaustive_auroc

TRUTH = np.array([1, 0, 1, 0])
SCORES = np.array([0.9, 0.8, 0.7, 0.1])


def precision_recall_sweep(y, s):
    """AUPRC by thresholding at every distinct score, computed one threshold at a time."""
    y = np.ravel(y).astype(bool)
    s = np.ravel(s)
    area, prev_recall = 0.0, 0.0
    for t in sorted(set(s.tolist()), reverse=True):
        hit = s >= t
        tp = np.sum(hit & y)
        recall = tp / y.sum()
        area += (recall - prev_recall) * tp / hit.sum()
        prev_recall = recall
    return area


class TestF1Accuracy:
    def test_perfect(self):
        Y = np.array([[1, 0], [0, 1]])
        assert micro_f1(Y, Y) == 1.0
        assert accuracy(Y, Y) == 1.0

    def test_all_negative_prediction(self):
        assert micro_f1(np.array([[1, 0]]), np.zeros((1, 2))) == 0.0

    def test_hand_value(self):
        # TP=2, FP=1, FN=1
        t = np.array([[1, 1, 1, 0, 0]])
        p = np.array([[1, 1, 0, 1, 0]])
        assert micro_f1(t, p) == pytest.approx(4 / 6, abs=0)
        assert round(micro_f1(t, p), 4) == 0.6667

    def test_empty_denominator(self):
        assert micro_f1(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0

    def test_accuracy_values(self):
        t = np.array([[1, 0], [0, 1]])
        assert accuracy(t, 1 - t) == 0.0
        assert accuracy(t, np.array([[1, 0], [0, 0]])) == 0.75

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            micro_f1(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_column_permutation_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t = rng.integers(0, 2, size=(6, 4))
            p = rng.integers(0, 2, size=(6, 4))
            perm = rng.permutation(4)
            assert micro_f1(t, p) == micro_f1(t[:, perm], p[:, perm])
            assert accuracy(t, p) == accuracy(t[:, perm], p[:, perm])


class TestRanking:
    def test_hand_example(self):
        assert micro_auroc(TRUTH, SCORES) == 0.75
        # precision 1 at recall 1/2, 2/3 at recall 1
        assert micro_auprc(TRUTH, SCORES) == pytest.approx(0.5 + (2 / 3) * 0.5, abs=1e-15)
        assert round(micro_auprc(TRUTH, SCORES), 4) == 0.8333
        assert exhaustive_auroc(TRUTH, SCORES) == 0.75

    def test_perfect(self):
        Y = np.array([[1, 0, 0], [0, 1, 1]])
        assert micro_auroc(Y, Y.astype(float)) == 1.0
        assert micro_auprc(Y, Y.astype(float)) == 1.0

    def test_all_tied(self):
        Y = np.array([[1, 0], [0, 0], [1, 1]])
        assert micro_auroc(Y, np.full(Y.shape, 0.3)) == 0.5

    def test_undefined(self):
        with pytest.raises(UndefinedMetricError):
            micro_auroc(np.ones((2, 2)), np.random.default_rng(0).random((2, 2)))
        with pytest.raises(UndefinedMetricError):
            micro_auprc(np.zeros((2, 2)), np.random.default_rng(0).random((2, 2)))

    def test_exhaustive_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            shape = (int(rng.integers(2, 15)), int(rng.integers(1, 10)))
            Y = rng.integers(0, 2, size=shape)
            if Y.all() or not Y.any():
                Y.flat[0] = 1 - Y.flat[0]
            S = rng.integers(0, 5, size=shape) / 4.0  # coarse scores force ties
            assert micro_auroc(Y, S) == pytest.approx(exhaustive_auroc(Y, S), abs=1e-12)
            assert micro_auprc(Y, S) == pytest.approx(precision_recall_sweep(Y, S), abs=1e-12)

    def test_sklearn_agreement(self):
        metrics = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(2)
        Y = rng.integers(0, 2, size=(40, 5))
        S = rng.random((40, 5))
        assert micro_auroc(Y, S) == pytest.approx(metrics.roc_auc_score(Y, S, average="micro"), abs=1e-12)
        assert micro_auprc(Y, S) == pytest.approx(metrics.average_precision_score(Y, S, average="micro"), abs=1e-12)
        assert micro_f1(Y, S > 0.5) == pytest.approx(metrics.f1_score(Y, S > 0.5, average="micro"), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        Y = rng.integers(0, 2, size=(8, 3))
        Y[0, 0], Y[0, 1] = 1, 0
        S = rng.integers(0, 6, size=(8, 3)).astype(float)
        assert micro_auroc(Y, S) == micro_auroc(Y, np.exp(2 * S) + 7)
        assert micro_auprc(Y, S) == pytest.approx(micro_auprc(Y, np.exp(2 * S) + 7), abs=1e-15)

    def test_random_scores_band(self):
        rng = np.random.default_rng(3)
        Y = rng.integers(0, 2, size=(1000, 10))
        assert 0.4 <= micro_auroc(Y, rng.random(Y.shape)) <= 0.6


class TestClassifier:
    def test_separable_toy(self):
        X = np.array([[0.0, 0.0], [0.2, 0.1], [1.0, 1.0], [0.9, 1.2]])
        Y = np.array([[1, 0], [1, 0], [0, 1], [0, 1]])
        model = train_ovr(X, Y, epochs=500)
        assert micro_f1(Y, binarize(predict_scores(model, X))) == 1.0

    def test_all_zero_labels(self):
        with pytest.raises(ValueError, match="no label"):
            train_ovr(np.eye(3), np.zeros((3, 2)))

    def test_skipped_label_flagged(self):
        X = np.random.default_rng(0).normal(size=(6, 2))
        Y = np.array([[1, 0]] * 3 + [[0, 0]] * 3)
        with pytest.warns(SkippedLabelWarning):
            model = train_ovr(X, Y, epochs=10)
        assert model.skipped == (1,)
        assert not model.weights[1].any()

    def test_seed_determinism(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(10, 3))
        Y = rng.integers(0, 2, size=(10, 2))
        Y[0] = 1
        a = train_ovr(X, Y, epochs=50, seed=4).weights
        b = train_ovr(X, Y, epochs=50, seed=4).weights
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, train_ovr(X, Y, epochs=50, seed=5).weights)

    def test_zero_weights(self):
        model = LinearOvrModel(np.zeros((2, 4)))
        np.testing.assert_array_equal(predict_scores(model, np.random.default_rng(0).normal(size=(3, 3))), 0.5)

    def test_scores_open_interval_and_monotone(self):
        model = LinearOvrModel(np.array([[2.0, -1.0, 0.5]]))
        X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        s = predict_scores(model, X)[:, 0]
        assert np.all((s > 0) & (s < 1))
        assert s[0] < s[1] < s[2]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="features"):
            predict_scores(LinearOvrModel(np.zeros((1, 3))), np.zeros((2, 3)))

    def test_threshold_strict(self):
        np.testing.assert_array_equal(binarize([0.5, 0.5000001, 0.2]), [0, 1, 0])

    def test_standardization_folded_back(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(30, 2)) * [1000.0, 0.001] + [5e3, -2.0]
        Y = (X[:, :1] > 5e3).astype(int)
        model = train_ovr(X, Y, epochs=300)
        assert micro_f1(Y, binarize(predict_scores(model, X))) > 0.9


class TestKfold:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.Y = np.repeat(np.eye(3, dtype=int), 10, axis=0)
        self.X = self.Y * 3.0 + rng.normal(0, 0.5, size=(30, 3))

    def test_folds_partition(self):
        folds = fold_assignment(23, 5, seed=1)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))
        assert {len(f) for f in folds} <= {4, 5}
        for a, b in zip(folds, fold_assignment(23, 5, seed=1)):
            np.testing.assert_array_equal(a, b)

    def test_report(self):
        rep = kfold_cv(self.X, self.Y, k=5, seed=0, epochs=200)
        assert len(rep.per_fold) == 5
        for m in ("accuracy", "micro_f1", "micro_auprc", "micro_auroc"):
            assert 0 <= getattr(rep, m) <= 1
            assert getattr(rep, m) == pytest.approx(np.mean([f[m] for f in rep.per_fold]), abs=1e-15)
        assert rep.micro_auroc > 0.95

    def test_deterministic(self):
        a = kfold_cv(self.X, self.Y, seed=3, epochs=50)
        b = kfold_cv(self.X, self.Y, seed=3, epochs=50)
        assert a.to_json() == b.to_json()

    def test_leave_one_out(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = kfold_cv(self.X[:8], self.Y[:8], k=8, epochs=20)
        assert len(rep.per_fold) == 8

    def test_undefined_fold_excluded(self):
        X = np.arange(6, dtype=float)[:, None]
        Y = np.array([[1], [0], [1], [0], [1], [1]])
        with pytest.warns(RuntimeWarning, match="excluded"):
            rep = kfold_cv(X, Y, k=6, epochs=5)
        # every single-row fold is all positive or all negative
        assert all(not f["defined"] for f in rep.per_fold)
        assert rep.micro_auroc is None
        assert len(rep.warnings) == 6

    @pytest.mark.parametrize("k", [1, 31])
    def test_bad_k(self, k):
        with pytest.raises(ValueError):
            kfold_cv(self.X, self.Y, k=k)

    def test_json_keys(self):
        d = kfold_cv(self.X, self.Y, epochs=10).to_dict()
        assert {"accuracy", "micro_f1", "micro_auprc", "micro_auroc", "per_fold", "fold_seed", "warnings"} <= set(d)


def test_score_report_keys():
    rep = score_report(TRUTH[:, None], SCORES[:, None])
    assert rep["micro_auroc"] == 0.75
    assert rep["accuracy"] == 0.75


def test_scores_tsv_round_trip(tmp_path):
    S = np.random.default_rng(0).random((3, 2))
    write_scores_tsv(S, ["a", "b", "c"], ["GO:1", "GO:2"], tmp_path / "s.tsv")
    nodes, labels, back = read_scores_tsv(tmp_path / "s.tsv")
    assert nodes == ["a", "b", "c"] and labels == ["GO:1", "GO:2"]
    np.testing.assert_array_equal(back, S)
