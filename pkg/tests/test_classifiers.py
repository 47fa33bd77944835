import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gramlab.classifiers import (
    KernelMarginClassifier,
    MarginLoss,
    TrainingSet,
    classify,
    decision_from_gram_row,
    decision_value,
    fit,
    fit_l1,
    logistic_objective_gradient,
    parse_model,
    probability_from_logit,
    serialize_model,
)
from gramlab.exceptions import SingularSystemError
from gramlab.kernels import Kernel


def random_psd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n))
    K = A @ A.T / n * scale
    return (K + K.T) / 2.0


def ts_identity():
    return TrainingSet.from_gram(np.eye(2), np.array([1.0, -1.0]))


def hinge_primal(K, y, mu, c, theta=1.0):
    f = K @ c
    return float(np.mean(np.maximum(1.0 - theta * y * f, 0.0)) + mu * (c @ f))


def hinge_grid_min(K, y, mu, theta=1.0, step=0.05, tmax=3.0):
    """Exhaustive coefficient grid search, sign-reduced to c_i = y_i t_i with
    t_i >= 0 (the dual form guarantees an optimum of that sign pattern)."""
    n = len(y)
    Ky = K * np.outer(y, y)
    axis = np.arange(0.0, tmax + step / 2, step)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    T = np.stack([g.ravel() for g in grids], axis=1)
    tau = T @ Ky
    loss = np.mean(np.maximum(1.0 - tau, 0.0), axis=1)
    quad = np.einsum("ij,ij->i", T @ Ky, T)
    return float(np.min(loss + mu * quad))


def test_squared_closed_form_identity_gram():
    model = fit(ts_identity(), MarginLoss("squared"), 0.5)
    assert np.allclose(model.coefficients, [0.5, -0.5], atol=1e-12)


def test_squared_stationarity_invariant():
    rng = np.random.default_rng(1)
    K = random_psd(rng, 6)
    y = np.array([1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
    mu = 0.3
    model = fit(TrainingSet.from_gram(K, y), MarginLoss("squared"), mu)
    resid = (K + len(y) * mu * np.eye(len(y))) @ model.coefficients - y
    assert np.max(np.abs(resid)) <= 1e-8


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 12))
def test_ls_svm_equals_ridge(seed, n):
    rng = np.random.default_rng(seed)
    K = random_psd(rng, n)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    if np.all(y == y[0]):
        y[0] = -y[0]
    mu = float(rng.uniform(0.05, 1.0))
    model = fit(TrainingSet.from_gram(K, y), MarginLoss("squared"), mu)
    ridge = np.linalg.solve(K + n * mu * np.eye(n), y)
    assert np.max(np.abs(model.coefficients - ridge)) <= 1e-8


def test_squared_mu_floor_error():
    K = np.outer([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(SingularSystemError, match="mu"):
        fit(TrainingSet.from_gram(K, np.array([1.0, -1.0])), MarginLoss("squared"), 1e-18)


def test_hinge_identity_gram_example():
    model = fit(ts_identity(), MarginLoss("hinge"), 0.25)
    assert np.allclose(model.coefficients, [1.0, -1.0], atol=1e-6)
    assert model.objective == pytest.approx(0.5, abs=1e-8)


def test_hinge_matches_grid_oracle_small():
    rng = np.random.default_rng(7)
    for n in (2, 3):
        for _ in range(3):
            K = random_psd(rng, n) + 0.3 * np.eye(n)
            y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            if np.all(y == y[0]):
                y[0] = -y[0]
            mu = float(rng.uniform(0.2, 0.5))
            model = fit(TrainingSet.from_gram(K, y), MarginLoss("hinge"), mu)
            grid = hinge_grid_min(K, y, mu)
            assert model.objective <= grid + 1e-8
            assert grid - model.objective <= 0.2


def test_hinge_objective_history_monotone():
    rng = np.random.default_rng(3)
    K = random_psd(rng, 8)
    y = np.where(rng.random(8) < 0.5, -1.0, 1.0)
    y[:2] = [1.0, -1.0]
    model = fit(TrainingSet.from_gram(K, y), MarginLoss("hinge"), 0.1)
    hist = model.diagnostics["objective_history"]
    assert all(hist[i + 1] <= hist[i] + 1e-12 for i in range(len(hist) - 1))


def test_logistic_antisymmetric_and_stationary():
    for mu in (0.01, 0.1, 1.0):
        model = fit(ts_identity(), MarginLoss("logistic"), mu)
        c = model.coefficients
        assert c[0] == pytest.approx(-c[1], abs=1e-10)
        assert model.diagnostics["grad_norm"] <= 1e-8


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    K = random_psd(rng, 5)
    y = np.array([1.0, 1.0, -1.0, 1.0, -1.0])
    mu = 0.2
    model = fit(TrainingSet.from_gram(K, y), MarginLoss("logistic"), mu)
    c = model.coefficients
    _, grad = logistic_objective_gradient(K, y, mu, c)
    h = 1e-6
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        op, _ = logistic_objective_gradient(K, y, mu, c + e)
        om, _ = logistic_objective_gradient(K, y, mu, c - e)
        fd = (op - om) / (2.0 * h)
        assert grad[j] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_logistic_history_monotone():
    rng = np.random.default_rng(4)
    K = random_psd(rng, 10)
    y = np.where(rng.random(10) < 0.4, -1.0, 1.0)
    y[:2] = [1.0, -1.0]
    model = fit(TrainingSet.from_gram(K, y), MarginLoss("logistic"), 0.05)
    hist = model.diagnostics["objective_history"]
    assert all(hist[i + 1] <= hist[i] + 1e-12 for i in range(len(hist) - 1))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["hinge", "logistic", "squared"]))
def test_fitted_objective_beats_zero(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    K = random_psd(rng, n)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y[: 2] = [1.0, -1.0]
    loss = MarginLoss(kind)
    model = fit(TrainingSet.from_gram(K, y), loss, 0.2)
    zero_obj = 1.0 if kind != "logistic" else float(np.log(2.0))
    assert model.objective <= zero_obj + 1e-9


def test_separable_hinge_loss_vanishes_with_mu():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    ts = TrainingSet.from_points(X, y, Kernel("gaussian", 1.0))
    losses = []
    for mu in (1.0, 0.1, 0.01, 0.001):
        model = fit(ts, MarginLoss("hinge"), mu)
        f = ts.gram @ model.coefficients
        losses.append(float(np.mean(np.maximum(1.0 - y * f, 0.0))))
    assert all(losses[i + 1] <= losses[i] + 1e-9 for i in range(3))
    assert losses[-1] <= 1e-2


def test_semisupervised_drops_unlabeled_terms():
    rng = np.random.default_rng(9)
    K = random_psd(rng, 5)
    y = np.array([1.0, -1.0, 0.0, 1.0, 0.0])
    model = fit(TrainingSet.from_gram(K, y), MarginLoss("squared"), 0.4)
    labeled = y != 0
    sub = fit(
        TrainingSet.from_gram(K[np.ix_(labeled, labeled)], y[labeled]),
        MarginLoss("squared"),
        0.4,
    )
    assert np.allclose(model.coefficients[labeled], sub.coefficients, atol=1e-10)
    assert np.allclose(model.coefficients[~labeled], 0.0, atol=1e-10)


def test_one_class_rejected():
    with pytest.raises(ValueError, match="classes"):
        TrainingSet.from_gram(np.eye(2), np.array([1.0, 1.0]))
    with pytest.raises(ValueError, match="labeled"):
        TrainingSet.from_gram(np.eye(2), np.array([1.0, 0.0]))


def test_nonpositive_mu_rejected():
    with pytest.raises(ValueError):
        fit(ts_identity(), MarginLoss("hinge"), 0.0)
    with pytest.raises(ValueError):
        fit_l1(ts_identity(), -1.0)


def test_l1_identity_gram_soft_threshold():
    model = fit_l1(ts_identity(), 0.5)
    assert np.allclose(model.coefficients, [0.5, -0.5], atol=1e-10)
    model = fit_l1(ts_identity(), 1.0)
    assert np.array_equal(model.coefficients, np.zeros(2))
    assert model.diagnostics["n_zero"] == 2


def test_l1_vanishing_penalty_recovers_least_squares():
    model = fit_l1(ts_identity(), 1e-12)
    assert np.allclose(model.coefficients, [1.0, -1.0], atol=1e-9)


def test_l1_matches_grid_oracle_2d():
    K = np.eye(2)
    y = np.array([1.0, -1.0])
    mu1 = 0.5
    model = fit_l1(TrainingSet.from_gram(K, y), mu1)
    grid = np.arange(-1.5, 1.5001, 0.002)
    C1, C2 = np.meshgrid(grid, grid, indexing="ij")
    obj = 0.5 * ((y[0] - C1) ** 2 + (y[1] - C2) ** 2) + mu1 * (np.abs(C1) + np.abs(C2))
    assert model.objective <= float(np.min(obj)) + 1e-8


def test_l1_history_monotone():
    rng = np.random.default_rng(12)
    K = random_psd(rng, 6)
    y = np.where(rng.random(6) < 0.5, -1.0, 1.0)
    y[:2] = [1.0, -1.0]
    model = fit_l1(TrainingSet.from_gram(K, y), 0.05)
    hist = model.diagnostics["objective_history"]
    assert all(hist[i + 1] <= hist[i] + 1e-12 for i in range(len(hist) - 1))


def test_decision_value_examples():
    model = fit(ts_identity(), MarginLoss("squared"), 0.5)
    assert decision_from_gram_row(model, np.array([1.0, 0.0])) == pytest.approx(0.5)
    zero = parse_model(serialize_model(model))
    object.__setattr__(zero, "coefficients", np.zeros(2))
    assert decision_from_gram_row(zero, np.array([3.0, -2.0])) == 0.0
    hinge_model = fit(ts_identity(), MarginLoss("hinge"), 0.25)
    assert decision_value(hinge_model, 0) == pytest.approx(1.0, abs=1e-6)


def test_decision_value_requires_gram_row_for_abstract_models():
    model = fit(ts_identity(), MarginLoss("squared"), 0.5)
    with pytest.raises(ValueError, match="gram row"):
        decision_value(model, np.array([0.3, 0.4]))


def test_classify_tie_break():
    model = fit(ts_identity(), MarginLoss("squared"), 0.5)
    assert classify(model, 0) == 1
    object.__setattr__(model, "coefficients", np.zeros(2))
    assert classify(model, 0) == 1
    object.__setattr__(model, "coefficients", np.array([-1.0, 0.0]))
    assert classify(model, 0) == -1


def test_probability_from_logit():
    assert probability_from_logit(0.0) == 0.5
    assert probability_from_logit(np.log(4.0)) == pytest.approx(0.8, abs=1e-12)
    assert probability_from_logit(-30.0) < 1e-13


def test_serialization_roundtrip_bit_exact():
    rng = np.random.default_rng(21)
    X = rng.standard_normal((6, 2))
    y = np.array([1.0, -1.0, 1.0, 0.0, -1.0, 1.0])
    ts = TrainingSet.from_points(X, y, Kernel("gaussian", 0.7))
    for loss in (MarginLoss("hinge"), MarginLoss("logistic"), MarginLoss("squared")):
        model = fit(ts, loss, 0.15)
        clone = parse_model(serialize_model(model))
        assert np.array_equal(clone.coefficients, model.coefficients)
        f1 = model.gram @ model.coefficients
        f2 = clone.gram @ clone.coefficients
        assert np.array_equal(f1, f2)
        q = rng.standard_normal(2)
        assert decision_value(model, q) == decision_value(clone, q)


def test_serialization_rejects_unknown_format():
    doc = json.loads(serialize_model(fit(ts_identity(), MarginLoss("squared"), 0.5)))
    doc["format"] = "something-else"
    with pytest.raises(ValueError):
        parse_model(json.dumps(doc))


def test_estimator_api_points_and_params():
    rng = np.random.default_rng(31)
    X = rng.standard_normal((30, 2))
    y = np.where(X[:, 0] + 0.3 * rng.standard_normal(30) > 0, 1.0, -1.0)
    clf = KernelMarginClassifier(loss="logistic", mu=0.05, width=1.5)
    assert clf.get_params()["mu"] == 0.05
    clf.set_params(mu=0.1).fit(X, y)
    assert clf.score(X, y) >= 0.8
    proba = clf.predict_proba(X)
    assert np.allclose(proba.sum(axis=1), 1.0)
    assert np.all((proba > 0) & (proba < 1))
    f = clf.decision_function(X)
    assert np.array_equal(clf.predict(X), np.where(f >= 0, 1.0, -1.0))


def test_estimator_precomputed_gram():
    K = np.eye(3)
    y = np.array([1.0, -1.0, 1.0])
    clf = KernelMarginClassifier(loss="squared", mu=0.5, kernel="precomputed").fit(K, y)
    assert np.allclose(clf.decision_function(K), K @ clf.coef_)


def test_estimator_l1_requires_squared():
    with pytest.raises(ValueError):
        KernelMarginClassifier(loss="hinge", penalty="l1").fit(np.eye(2), [1.0, -1.0])


def test_estimator_proba_requires_logistic():
    clf = KernelMarginClassifier(loss="hinge", mu=0.2, kernel="precomputed").fit(
        np.eye(2), [1.0, -1.0]
    )
    with pytest.raises(ValueError):
        clf.predict_proba(np.eye(2))
