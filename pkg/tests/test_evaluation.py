import numpy as np
import pytest

from gvnr.evaluation import (EvalReport, LabeledNodes, MissingClassWarning, accuracy,
                             build_labeled_nodes, decision_scores, evaluate,
                             fit_binary_logreg, fit_logreg_ovr, macro_f1, micro_f1,
                             nearest_words, predict, read_label_file,
                             stratified_split, _nll_and_grad)


def single_label(ids):
    return LabeledNodes(labels=[[i] for i in ids],
                        label_names=[f"c{i}" for i in range(max(ids) + 1)],
                        multi_label=False)


class TestFitLogreg:
    def test_separable_data_perfect_training_accuracy(self):
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(-3, 0.3, (40, 2)), rng.normal(3, 0.3, (40, 2))])
        labels = single_label([0] * 40 + [1] * 40)
        idx = np.arange(80)
        weights = fit_logreg_ovr(X, labels, idx)
        predicted = predict(weights, X, labels)
        assert accuracy(predicted, labels.labels) == 1.0

    def test_random_labels_are_chance_level(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(400, 8))
        ids = rng.integers(0, 2, 400).tolist()
        labels = single_label(ids)
        report = evaluate(X, labels, [0.5], repetitions=5, seed=3)
        assert abs(report.means[0] - 0.5) <= 0.05

    def test_seven_class_chance_level(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(700, 8))
        ids = (np.arange(700) % 7).tolist()
        labels = single_label(ids)
        report = evaluate(X, labels, [0.5], repetitions=5, seed=4)
        assert abs(report.means[0] - 1 / 7) <= 0.05

    def test_weights_match_sklearn_oracle(self):
        sklearn_linear = pytest.importorskip("sklearn.linear_model")
        rng = np.random.default_rng(7)
        X = rng.normal(size=(50, 3))
        true_w = np.array([1.5, -2.0, 0.5])
        prob = 1 / (1 + np.exp(-(X @ true_w + 0.3)))
        y = (rng.random(50) < prob).astype(float)
        mine = fit_binary_logreg(X, y)
        oracle = sklearn_linear.LogisticRegression(
            penalty=None, tol=1e-12, max_iter=20000).fit(X, y)
        ref = np.concatenate([oracle.coef_[0], oracle.intercept_])
        assert np.max(np.abs(mine - ref)) < 1e-3

    def test_final_loss_at_convex_optimum(self):
        sklearn_linear = pytest.importorskip("sklearn.linear_model")
        rng = np.random.default_rng(8)
        X = rng.normal(size=(60, 4))
        y = (rng.random(60) < 0.5).astype(float)
        mine = fit_binary_logreg(X, y)
        oracle = sklearn_linear.LogisticRegression(
            penalty=None, tol=1e-12, max_iter=20000).fit(X, y)
        ref = np.concatenate([oracle.coef_[0], oracle.intercept_])
        X1 = np.hstack([X, np.ones((60, 1))])
        loss_mine, _ = _nll_and_grad(mine, X1, y)
        loss_ref, _ = _nll_and_grad(ref, X1, y)
        assert loss_mine <= loss_ref + 1e-6

    def test_missing_class_warns_and_scores_negative(self):
        X = np.random.default_rng(3).normal(size=(10, 2))
        labels = LabeledNodes(labels=[[0]] * 10, label_names=["a", "b"],
                              multi_label=False)
        with pytest.warns(MissingClassWarning):
            weights = fit_logreg_ovr(X, labels, np.arange(10))
        scores = decision_scores(weights, X)
        assert np.all(scores[:, 1] == -np.inf)
        assert all(p == [0] for p in predict(weights, X, labels))

    def test_empty_train_split_rejected(self):
        labels = single_label([0, 1])
        with pytest.raises(ValueError):
            fit_logreg_ovr(np.zeros((2, 2)), labels, np.array([], dtype=int))


class TestPredict:
    def test_argmax_single_label(self):
        weights = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        X = np.array([[2.0, -1.0], [-1.0, 2.0]])
        labels = single_label([0, 1])
        assert predict(weights, X, labels) == [[0], [1]]

    def test_multilabel_top_k_by_true_count(self):
        # scores (0.9, 0.8, 0.1) with two true labels -> {0, 1}
        weights = np.array([[0.9], [0.8], [0.1]])  # bias-only classifiers
        X = np.zeros((1, 0))
        labels = LabeledNodes(labels=[[1, 2]], label_names=["a", "b", "c"],
                              multi_label=True)
        assert predict(weights, X, labels) == [[0, 1]]

    def test_tie_breaks_to_lowest_id(self):
        weights = np.array([[0.5], [0.5], [0.5]])
        X = np.zeros((1, 0))
        single = LabeledNodes(labels=[[2]], label_names=["a", "b", "c"],
                              multi_label=False)
        assert predict(weights, X, single) == [[0]]
        multi = LabeledNodes(labels=[[1, 2]], label_names=["a", "b", "c"],
                             multi_label=True)
        assert predict(weights, X, multi) == [[0, 1]]


class TestMetrics:
    def test_micro_f1_equals_accuracy_single_label(self):
        rng = np.random.default_rng(5)
        true = [[int(rng.integers(0, 3))] for _ in range(50)]
        predicted = [[int(rng.integers(0, 3))] for _ in range(50)]
        assert micro_f1(predicted, true) == pytest.approx(accuracy(predicted, true))

    def test_micro_f1_counts(self):
        true = [[0, 1], [1], [2]]
        predicted = [[0, 2], [1], [1]]
        # tp=2 (0 and 1), fp=2, fn=2 -> f1 = 4/8
        assert micro_f1(predicted, true) == 0.5

    def test_macro_f1_range(self):
        true = [[0], [1], [2]]
        predicted = [[0], [1], [1]]
        value = macro_f1(predicted, true, 3)
        assert 0.0 <= value <= 1.0


class TestSplits:
    def test_stratified_keeps_every_class(self):
        ids = [0] * 50 + [1] * 30 + [2] * 5
        labels = single_label(ids)
        rng = np.random.default_rng(0)
        train_idx, test_idx = stratified_split(labels, 0.1, rng)
        train_classes = {labels.labels[i][0] for i in train_idx}
        assert train_classes == {0, 1, 2}
        assert len(set(train_idx) & set(test_idx)) == 0
        assert len(train_idx) + len(test_idx) == 85

    def test_ratio_controls_size(self):
        labels = single_label([0] * 100 + [1] * 100)
        rng = np.random.default_rng(1)
        train_idx, _ = stratified_split(labels, 0.3, rng)
        assert len(train_idx) == 60

    def test_unlabeled_nodes_excluded(self):
        labels = LabeledNodes(labels=[[0], [], [1], [0]], label_names=["a", "b"],
                              multi_label=False)
        rng = np.random.default_rng(2)
        train_idx, test_idx = stratified_split(labels, 0.5, rng)
        assert 1 not in set(train_idx) | set(test_idx)


class TestEvaluate:
    def test_oracle_features_are_perfect(self):
        ids = ([0] * 30 + [1] * 30 + [2] * 30)
        X = np.eye(3)[ids]
        labels = single_label(ids)
        report = evaluate(X, labels, [0.1, 0.3, 0.5], repetitions=3, seed=0)
        assert report.means == [1.0, 1.0, 1.0]

    def test_split_determinism(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(90, 4)) + np.eye(4)[np.arange(90) % 4][:, :4] * 2
        labels = single_label((np.arange(90) % 4).tolist())
        r1 = evaluate(X, labels, [0.3, 0.5], repetitions=4, seed=11)
        r2 = evaluate(X, labels, [0.3, 0.5], repetitions=4, seed=11)
        assert r1.means == r2.means and r1.stds == r2.stds

    def test_monotone_in_training_ratio(self):
        rng = np.random.default_rng(6)
        ids = (np.arange(300) % 3).tolist()
        X = np.eye(3)[ids] + rng.normal(0, 0.9, (300, 3))
        labels = single_label(ids)
        report = evaluate(X, labels, [0.1, 0.2, 0.3, 0.4, 0.5], repetitions=10, seed=2)
        for i in range(len(report.means) - 1):
            assert report.means[i + 1] >= report.means[i] - report.stds[i]

    def test_multilabel_reports_micro_and_macro(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(60, 5))
        labels = LabeledNodes(
            labels=[sorted(set(rng.integers(0, 4, size=rng.integers(1, 3)).tolist()))
                    for _ in range(60)],
            label_names=["a", "b", "c", "d"], multi_label=True)
        report = evaluate(X, labels, [0.5], repetitions=3, seed=1)
        assert report.metric == "micro_f1"
        assert "macro_f1" in report.secondary
        assert 0.0 <= report.means[0] <= 1.0

    def test_ratio_domain_checked(self):
        labels = single_label([0, 1])
        with pytest.raises(ValueError):
            evaluate(np.zeros((2, 2)), labels, [0.0, 0.5])
        with pytest.raises(ValueError):
            evaluate(np.zeros((2, 2)), labels, [])

    def test_report_table_formatting(self):
        report = EvalReport(ratios=[0.1, 0.5], means=[0.695, 0.802],
                            stds=[0.01, 0.02], metric="accuracy",
                            repetitions=10, seed=0)
        table = report.format_table()
        assert "10%" in table and "50%" in table
        assert "69.5" in table and "80.2" in table


class TestNearestWords:
    def test_query_word_ranks_first(self):
        rng = np.random.default_rng(0)
        W = rng.normal(size=(20, 6))
        out = nearest_words(W[7], W, top_n=3)
        assert out[0][0] == 7
        assert out[0][1] == pytest.approx(1.0)

    def test_exclusion(self):
        rng = np.random.default_rng(0)
        W = rng.normal(size=(10, 4))
        words = [f"w{i}" for i in range(10)]
        out = nearest_words(W[2], W, top_n=2, exclude={"w2"}, words=words)
        assert all(w != "w2" for w, _ in out)

    def test_orthogonal_query_falls_back_to_id_order(self):
        W = np.zeros((5, 3))
        W[:, 0] = [1, 2, 3, 4, 5]
        query = np.array([0.0, 1.0, 0.0])
        out = nearest_words(query, W, top_n=5)
        assert [w for w, _ in out] == [0, 1, 2, 3, 4]
        assert all(s == 0.0 for _, s in out)

    def test_zero_norm_query_rejected(self):
        with pytest.raises(ValueError, match="zero norm"):
            nearest_words(np.zeros(3), np.ones((4, 3)), top_n=1)

    def test_zero_norm_rows_score_zero(self):
        W = np.zeros((3, 2))
        W[1] = [1.0, 0.0]
        out = nearest_words(np.array([1.0, 0.0]), W, top_n=3)
        assert out[0][0] == 1
        assert out[1:] == [(0, 0.0), (2, 0.0)]

    def test_deterministic_tie_break(self):
        W = np.tile(np.array([[1.0, 0.0]]), (4, 1))
        out1 = nearest_words(np.array([1.0, 0.0]), W, top_n=4)
        out2 = nearest_words(np.array([1.0, 0.0]), W, top_n=4)
        assert out1 == out2
        assert [w for w, _ in out1] == [0, 1, 2, 3]


class TestLabelIO:
    def test_read_label_file(self):
        by_id = read_label_file(["a red", "b red,blue", "# comment", ""])
        assert by_id == {"a": ["red"], "b": ["red", "blue"]}

    def test_malformed_line(self):
        with pytest.raises(ValueError, match="line 1"):
            read_label_file(["too many fields here"])

    def test_build_labeled_nodes_alignment(self):
        by_id = {"a": ["red"], "b": ["blue"], "zz": ["red"]}
        with pytest.warns(UserWarning, match="absent"):
            labeled = build_labeled_nodes(by_id, ["b", "a", "c"])
        assert labeled.labels == [[0], [1], []]
        assert labeled.label_names == ["blue", "red"]
        assert not labeled.multi_label

    def test_multilabel_detection(self):
        by_id = {"a": ["x", "y"], "b": ["x"]}
        labeled = build_labeled_nodes(by_id, ["a", "b"])
        assert labeled.multi_label
