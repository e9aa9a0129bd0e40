"""Solver, one-vs-rest, and calibration tests against independent oracles."""

import json
import math

import numpy as np
import pytest
from scipy import sparse
from scipy.special import expit

from oracles import (
    fit_sigmoid_reference,
    primal_objective_reference,
    sigmoid_nll_reference,
    solve_dual_reference,
)

from jurisvm.corpus import LabelScheme, Task
from jurisvm.errors import InputError
from jurisvm.features import SparseVector
from jurisvm.svm import (
    CalibratedModel,
    LinearModel,
    TrainParams,
    calibrate,
    decision_matrix,
    decision_values,
    dual_objective,
    fit_platt_sigmoid,
    model_from_dict,
    model_to_dict,
    predict_proba,
    predict_proba_matrix,
    primal_objective,
    stratified_holdout_split,
    train_binary,
    train_calibrated_ovr,
    train_ovr,
)


def tiny_problem(rng, n_max=12, d_max=4):
    n = int(rng.integers(3, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0  # both classes present
    return X, y


class TestTrainParams:
    def test_defaults(self):
        p = TrainParams()
        assert p.C == 1.0 and p.loss == "hinge_l2" and p.tol == 1e-4 and p.max_iter == 1000

    def test_validation(self):
        with pytest.raises(InputError):
            TrainParams(C=0.0)
        with pytest.raises(InputError):
            TrainParams(loss="hinge_l3")
        with pytest.raises(InputError):
            TrainParams(tol=-1.0)
        with pytest.raises(InputError):
            TrainParams(max_iter=0)

    def test_round_trip(self):
        p = TrainParams(C=2.0, loss="hinge_l1", tol=1e-6, max_iter=50, seed=9)
        assert TrainParams.from_dict(p.to_dict()) == p


class TestTrainBinary:
    def test_matches_oracle_on_small_problems(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            X, y = tiny_problem(rng)
            C = [0.1, 1.0, 10.0][trial % 3]
            loss = "hinge_l1" if trial % 2 else "hinge_l2"
            sol = train_binary(
                sparse.csr_matrix(X), y, TrainParams(C=C, loss=loss, tol=1e-10, max_iter=100_000, seed=trial)
            )
            assert sol.converged
            _, w_ref = solve_dual_reference(X, y, C, loss == "hinge_l2")
            p_cd = primal_objective_reference(X, y, sol.w, C, loss == "hinge_l2")
            p_ref = primal_objective_reference(X, y, w_ref, C, loss == "hinge_l2")
            assert abs(p_cd - p_ref) <= 1e-7 * max(1.0, abs(p_ref))

    def test_single_class_is_degenerate(self):
        X = sparse.csr_matrix(np.ones((3, 2)))
        sol = train_binary(X, np.ones(3), TrainParams())
        assert sol.degenerate
        assert np.array_equal(sol.w, np.zeros(2))

    def test_zero_feature_row_hits_l1_bound(self):
        X = sparse.csr_matrix(np.array([[0.0], [1.0]]))
        y = np.array([1.0, -1.0])
        sol = train_binary(X, y, TrainParams(C=0.5, loss="hinge_l1", tol=1e-10, max_iter=10_000))
        assert sol.alpha[0] == pytest.approx(0.5, abs=0)  # stuck at the box bound

    def test_validates_input(self):
        X = sparse.csr_matrix(np.array([[np.nan], [1.0]]))
        with pytest.raises(InputError):
            train_binary(X, np.array([1.0, -1.0]), TrainParams())
        with pytest.raises(InputError):
            train_binary(sparse.csr_matrix(np.ones((2, 1))), np.array([1.0, 2.0]), TrainParams())
        with pytest.raises(InputError):
            train_binary(sparse.csr_matrix(np.ones((2, 1))), np.array([1.0]), TrainParams())

    def test_objective_history_is_monotone(self):
        rng = np.random.default_rng(3)
        X, y = tiny_problem(rng, n_max=12, d_max=4)
        sol = train_binary(
            sparse.csr_matrix(X), y, TrainParams(C=1.0, tol=1e-10, max_iter=10_000), record_history=True
        )
        assert sol.objective_history is not None and sol.objective_history.size > 0
        assert np.all(np.diff(sol.objective_history) >= 0)

    def test_dual_primal_gap_small_at_optimum(self):
        rng = np.random.default_rng(11)
        X, y = tiny_problem(rng)
        sol = train_binary(sparse.csr_matrix(X), y, TrainParams(C=1.0, tol=1e-12, max_iter=200_000))
        p = primal_objective(sparse.csr_matrix(X), y, sol.w, 1.0, "hinge_l2")
        d = dual_objective(sparse.csr_matrix(X), y, sol.alpha, 1.0, "hinge_l2")
        assert p >= d - 1e-9
        assert p - d <= 1e-6 * max(1.0, abs(p))


def three_class_data(n_per=30, seed=5):
    rng = np.random.default_rng(seed)
    centers = np.array([[4.0, 0.0], [0.0, 4.0], [-4.0, -4.0]])
    X = np.vstack([rng.normal(loc=c, scale=0.5, size=(n_per, 2)) for c in centers])
    labels = ["alpha"] * n_per + ["beta"] * n_per + ["gamma"] * n_per
    scheme = LabelScheme(task=Task.LAW_AREA, classes=("alpha", "beta", "gamma"), min_count=0)
    return sparse.csr_matrix(X), labels, scheme


class TestTrainOvr:
    def test_separable_three_class(self):
        X, labels, scheme = three_class_data()
        model = train_ovr(X, labels, scheme, TrainParams(seed=1))
        scores = decision_matrix(model, X)
        picked = [scheme.classes[i] for i in scores.argmax(axis=1)]
        assert picked == labels

    def test_labels_outside_scheme_raise(self):
        X, labels, scheme = three_class_data()
        labels = list(labels)
        labels[0] = "delta"
        with pytest.raises(InputError):
            train_ovr(X, labels, scheme, TrainParams())

    def test_bias_handles_shifted_data(self):
        rng = np.random.default_rng(2)
        # both clusters live strictly on the positive axis: without a bias
        # term no linear score could separate them
        X = np.concatenate([rng.normal(8.0, 0.3, 20), rng.normal(12.0, 0.3, 20)])[:, None]
        labels = ["low"] * 20 + ["high"] * 20
        scheme = LabelScheme(task=Task.LAW_AREA, classes=("high", "low"), min_count=0)
        model = train_ovr(
            sparse.csr_matrix(X), labels, scheme, TrainParams(seed=3, max_iter=20_000, tol=1e-8)
        )
        scores = decision_matrix(model, sparse.csr_matrix(X))
        picked = [scheme.classes[i] for i in scores.argmax(axis=1)]
        assert picked == labels
        assert np.any(model.bias != 0.0)

    def test_jobs_does_not_change_result(self):
        X, labels, scheme = three_class_data()
        serial = train_ovr(X, labels, scheme, TrainParams(seed=4), jobs=1)
        threaded = train_ovr(X, labels, scheme, TrainParams(seed=4), jobs=3)
        assert np.array_equal(serial.weights, threaded.weights)
        assert np.array_equal(serial.bias, threaded.bias)

    def test_decision_values_match_matrix(self):
        X, labels, scheme = three_class_data(n_per=10)
        model = train_ovr(X, labels, scheme, TrainParams(seed=6))
        dense = X.toarray()
        row = dense[4]
        pairs = tuple((int(i), float(v)) for i, v in enumerate(row) if v != 0.0)
        vec = SparseVector(dims=dense.shape[1], pairs=pairs)
        assert np.allclose(decision_values(model, vec), decision_matrix(model, X)[4], atol=1e-12)


class TestPlatt:
    def test_matches_simplex_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            scores = np.concatenate([rng.normal(1.5, 1.0, 60), rng.normal(-1.5, 1.0, 40)])
            positive = np.concatenate([np.ones(60, bool), np.zeros(40, bool)])
            a_pkg, b_pkg = fit_platt_sigmoid(scores, positive)
            a_ref, b_ref = fit_sigmoid_reference(scores, positive)
            nll_pkg = sigmoid_nll_reference(scores, positive, a_pkg, b_pkg)
            nll_ref = sigmoid_nll_reference(scores, positive, a_ref, b_ref)
            assert nll_pkg <= nll_ref + 1e-6

    def test_confident_scores_give_confident_probabilities(self):
        scores = np.concatenate([np.full(40, 10.0), np.full(40, -10.0)])
        positive = np.concatenate([np.ones(40, bool), np.zeros(40, bool)])
        a, b = fit_platt_sigmoid(scores, positive)
        p_pos = expit(-(a * 10.0 + b))
        p_neg = expit(-(a * -10.0 + b))
        assert p_pos > 0.95
        assert p_neg < 0.05
        assert a < 0  # probability increases with the decision score

    def test_rejects_bad_input(self):
        with pytest.raises(InputError):
            fit_platt_sigmoid(np.array([]), np.array([], dtype=bool))
        with pytest.raises(InputError):
            fit_platt_sigmoid(np.array([1.0]), np.array([True, False]))


class TestCalibration:
    def test_probabilities_sum_to_one(self):
        X, labels, scheme = three_class_data()
        cm = train_calibrated_ovr(X, labels, scheme, TrainParams(seed=8))
        probs = predict_proba_matrix(cm, X)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all((probs > 0.0) & (probs < 1.0))

    def test_degenerate_holdout_class_gets_fixed_sigmoid(self):
        X, labels, scheme = three_class_data(n_per=10)
        model = train_ovr(X, labels, scheme, TrainParams(seed=9))
        holdout_labels = ["alpha"] * 6  # beta and gamma have no holdout positives
        cm = calibrate(model, X[:6], holdout_labels)
        n = 6
        for ci, cls_name in enumerate(scheme.classes):
            if cls_name == "alpha":
                continue
            assert cm.platt_a[ci] == 0.0
            assert cm.platt_b[ci] == pytest.approx(math.log(n + 1.0))
            # fixed sigmoid: p = 1/(n+2) regardless of the score
            assert expit(-cm.platt_b[ci]) == pytest.approx(1.0 / (n + 2.0))

    def test_softmax_mode_gives_identical_outputs_for_identical_scores(self):
        X, labels, scheme = three_class_data()
        cm = train_calibrated_ovr(X, labels, scheme, TrainParams(seed=10), calibration="softmax")
        assert cm.platt_a is None
        row = X[3]
        p1 = predict_proba_matrix(cm, row)
        p2 = predict_proba_matrix(cm, row)
        assert np.array_equal(p1, p2)
        assert np.allclose(p1.sum(axis=1), 1.0, atol=1e-12)

    def test_unknown_calibration_mode(self):
        X, labels, scheme = three_class_data(n_per=5)
        with pytest.raises(InputError):
            train_calibrated_ovr(X, labels, scheme, TrainParams(), calibration="isotonic")


class TestHoldoutSplit:
    def test_proportions_and_disjointness(self):
        labels = ["a"] * 50 + ["b"] * 10 + ["c"] * 2 + ["d"]
        train_idx, hold_idx = stratified_holdout_split(labels, seed=0)
        assert set(train_idx) | set(hold_idx) == set(range(len(labels)))
        assert set(train_idx) & set(hold_idx) == set()
        hold_labels = [labels[i] for i in hold_idx]
        assert hold_labels.count("a") == 10
        assert hold_labels.count("b") == 2
        assert hold_labels.count("c") == 1
        assert hold_labels.count("d") == 0  # singletons stay in training

    def test_deterministic(self):
        labels = ["a", "b"] * 20
        assert stratified_holdout_split(labels, seed=5) == stratified_holdout_split(labels, seed=5)
        assert stratified_holdout_split(labels, seed=5) != stratified_holdout_split(labels, seed=6)


class TestPersistence:
    def test_json_round_trip_is_bit_exact(self):
        X, labels, scheme = three_class_data()
        cm = train_calibrated_ovr(X, labels, scheme, TrainParams(seed=12))
        payload = json.loads(json.dumps(model_to_dict(cm, TrainParams(seed=12))))
        again = model_from_dict(payload)
        assert np.array_equal(cm.base.weights, again.base.weights)
        assert np.array_equal(cm.base.bias, again.base.bias)
        assert np.array_equal(cm.platt_a, again.platt_a)
        assert np.array_equal(cm.platt_b, again.platt_b)
        assert np.array_equal(predict_proba_matrix(cm, X), predict_proba_matrix(again, X))

    def test_dimension_mismatch_raises(self):
        model = LinearModel(classes=("a", "b"), weights=np.zeros((2, 3)), bias=np.zeros(2))
        with pytest.raises(InputError):
            decision_values(model, SparseVector(dims=2, pairs=()))
        cm = CalibratedModel(base=model)
        with pytest.raises(InputError):
            predict_proba(cm, SparseVector(dims=2, pairs=()))
