import numpy as np
import pytest
from sklearn.base import clone

from smiledyn.svm import (
    LinearSVM,
    dual_coordinate_ascent,
    dual_objective,
    load_model,
    predict,
    predict_batch,
    save_model,
    standardize_apply,
    standardize_fit,
    train,
)
from smiledyn.types import FeatureLayout, LayoutError, SmiledynError


def qp_oracle(X_aug, y, C, max_iter=200000, tol=1e-12):
    """Projected gradient ascent on the same box QP; stepsize 1/L."""
    Q = (y[:, None] * X_aug) @ (y[:, None] * X_aug).T
    lips = np.linalg.eigvalsh(Q)[-1]
    eta = 1.0 / max(lips, 1e-12)
    a = np.zeros(len(y))
    for _ in range(max_iter):
        g = 1.0 - Q @ a
        a_new = np.clip(a + eta * g, 0.0, C)
        if np.abs(a_new - a).max() < tol:
            a = a_new
            break
        a = a_new
    return a


def test_standardize_two_points():
    X = np.array([[0.0], [2.0]])
    means, stds = standardize_fit(X)
    assert means[0] == pytest.approx(1.0)
    assert stds[0] == pytest.approx(1.0)
    np.testing.assert_allclose(standardize_apply(X, means, stds).ravel(), [-1.0, 1.0])


def test_standardize_constant_feature():
    X = np.array([[5.0, 1.0], [5.0, 3.0], [5.0, 5.0]])
    means, stds = standardize_fit(X)
    assert stds[0] == 1.0
    out = standardize_apply(X, means, stds)
    np.testing.assert_allclose(out[:, 0], 0.0)


def test_standardize_random_matrix_moments():
    rng = np.random.default_rng(4)
    X = rng.normal(3.0, 2.5, (50, 7))
    means, stds = standardize_fit(X)
    out = standardize_apply(X, means, stds)
    assert np.abs(out.mean(axis=0)).max() <= 1e-12
    np.testing.assert_allclose(out.var(axis=0), 1.0, atol=1e-9)


def test_standardize_requires_two_samples():
    with pytest.raises(SmiledynError):
        standardize_fit(np.array([[1.0, 2.0]]))


def test_two_point_problem_boundary_at_zero():
    X = np.array([[-1.0], [1.0]])
    y = np.array([-1, 1])
    model = train(X, y, C=10.0)
    label_neg, margin_neg = predict(model, [-1.0])
    label_pos, margin_pos = predict(model, [1.0])
    assert (label_neg, label_pos) == (-1, 1)
    assert margin_neg < 0 < margin_pos
    _, margin_mid = predict(model, [0.0])
    assert margin_mid == pytest.approx(0.0, abs=1e-9)


def test_zero_margin_classifies_posed():
    X = np.array([[-1.0], [1.0]])
    model = train(X, np.array([-1, 1]), C=10.0)
    label, _ = predict(model, [0.0])
    assert label == -1  # Posed on ties


def test_label_flip_negates_weights_and_bias():
    rng = np.random.default_rng(6)
    X = rng.normal(0, 1, (12, 3))
    y = np.where(rng.random(12) > 0.5, 1, -1)
    y[0], y[1] = 1, -1  # both classes present
    m1 = train(X, y, C=2.0)
    m2 = train(X, -y, C=2.0)
    np.testing.assert_allclose(m1.weights, -m2.weights, atol=1e-6)
    assert m1.bias == pytest.approx(-m2.bias, abs=1e-6)


def test_dual_objective_matches_qp_oracle_on_small_problems():
    rng = np.random.default_rng(12)
    for trial in range(30):
        n = int(rng.integers(4, 21))
        d = int(rng.integers(1, 6))
        X = rng.normal(0, 1, (n, d))
        y = np.concatenate([np.ones(n // 2), -np.ones(n - n // 2)]).astype(int)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        means, stds = standardize_fit(X)
        X_aug = np.hstack([standardize_apply(X, means, stds), np.ones((n, 1))])
        alpha, w_aug, _ = dual_coordinate_ascent(X_aug, y.astype(float), C)
        alpha_oracle = qp_oracle(X_aug, y.astype(float), C)
        ours = dual_objective(alpha, X_aug, y.astype(float))
        best = dual_objective(alpha_oracle, X_aug, y.astype(float))
        assert ours == pytest.approx(best, rel=1e-3, abs=1e-6)
        # decision agreement on the training points
        w_oracle = X_aug.T @ (alpha_oracle * y)
        ours_pred = np.sign(X_aug @ w_aug)
        oracle_pred = np.sign(X_aug @ w_oracle)
        agree = np.mean(ours_pred[oracle_pred != 0] == oracle_pred[oracle_pred != 0])
        assert agree >= 0.95


def test_separable_blobs_holdout_accuracy():
    rng = np.random.default_rng(42)
    sigma = 1.0
    # separable: each blob stays 3 sigma away from the midplane
    X_pos = rng.normal([+3.0 * sigma, 0.0], sigma, (200, 2))
    X_neg = rng.normal([-3.0 * sigma, 0.0], sigma, (200, 2))
    X = np.vstack([X_pos, X_neg])
    y = np.concatenate([np.ones(200, dtype=int), -np.ones(200, dtype=int)])
    perm = rng.permutation(400)
    X, y = X[perm], y[perm]
    model = train(X[:320], y[:320], C=1.0)
    labels, _ = predict_batch(model, X[320:])
    assert np.mean(labels == y[320:]) >= 0.95


def test_training_accuracy_on_separable_data_with_large_C():
    rng = np.random.default_rng(8)
    X = np.vstack([rng.normal(3, 0.3, (20, 2)), rng.normal(-3, 0.3, (20, 2))])
    y = np.concatenate([np.ones(20, dtype=int), -np.ones(20, dtype=int)])
    model = train(X, y, C=1000.0)
    labels, _ = predict_batch(model, X)
    assert np.mean(labels == y) == 1.0


def test_training_determinism():
    rng = np.random.default_rng(15)
    X = rng.normal(0, 1, (30, 5))
    y = np.where(rng.random(30) > 0.5, 1, -1)
    y[:2] = [1, -1]
    m1 = train(X, y, C=1.0)
    m2 = train(X, y, C=1.0)
    assert m1.weights.tobytes() == m2.weights.tobytes()
    assert m1.bias == m2.bias


def test_prediction_invariant_under_positive_rescaling():
    rng = np.random.default_rng(20)
    X = rng.normal(0, 1, (20, 3))
    y = np.where(X[:, 0] > 0, 1, -1)
    model = train(X, y, C=1.0)
    labels, margins = predict_batch(model, X)
    scaled = np.where(2.5 * margins > 0, 1, -1)
    np.testing.assert_array_equal(labels, scaled)


def test_single_class_rejected():
    X = np.zeros((4, 2))
    with pytest.raises(SmiledynError, match="both classes"):
        train(X, np.ones(4, dtype=int), C=1.0)


def test_predict_layout_mismatch():
    X = np.array([[-1.0, 0.0], [1.0, 0.0]])
    model = train(X, np.array([-1, 1]), C=1.0)
    with pytest.raises(LayoutError):
        predict(model, [1.0, 2.0, 3.0])


def test_model_json_round_trip(tmp_path):
    rng = np.random.default_rng(33)
    X = rng.normal(0, 1, (20, 50))
    y = np.where(rng.random(20) > 0.5, 1, -1)
    y[:2] = [1, -1]
    model = train(X, y, C=0.5, layout=FeatureLayout.DMARKER_50, metadata={"seed": 7})
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    np.testing.assert_allclose(back.weights, model.weights)
    assert back.bias == model.bias
    assert back.C == 0.5
    assert back.layout is FeatureLayout.DMARKER_50
    assert back.metadata["seed"] == 7
    # identical predictions
    l1, m1 = predict_batch(model, X)
    l2, m2 = predict_batch(back, X)
    np.testing.assert_array_equal(l1, l2)
    np.testing.assert_allclose(m1, m2)


def test_estimator_api_numeric_and_string_labels():
    rng = np.random.default_rng(2)
    X = np.vstack([rng.normal(2, 0.5, (15, 2)), rng.normal(-2, 0.5, (15, 2))])
    y_num = np.concatenate([np.ones(15, dtype=int), -np.ones(15, dtype=int)])
    clf = LinearSVM(C=1.0)
    assert clone(clf).get_params()["C"] == 1.0
    clf.fit(X, y_num)
    assert set(np.unique(clf.predict(X))) <= {-1, 1}
    assert clf.score(X, y_num) == 1.0

    y_str = np.where(y_num > 0, "Spontaneous", "Posed")
    clf2 = LinearSVM(C=1.0).fit(X, y_str)
    preds = clf2.predict(X)
    assert set(preds) <= {"Spontaneous", "Posed"}
    assert np.mean(preds == y_str) == 1.0
    margins = clf2.decision_function(X)
    assert margins.shape == (30,)
