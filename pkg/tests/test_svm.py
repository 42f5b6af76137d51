import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dual_optimum
from surprisal_lab.errors import SurprisalLabError
from surprisal_lab.svm import (
    dual_objective,
    rbf_kernel,
    solve_dual,
    squared_distances,
    svm_predict,
    svm_train,
)


def _random_problem(rng, n):
    X = rng.normal(size=(n, 2))
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    rng.shuffle(y)
    return X, y


def test_dual_objective_matches_oracle():
    rng = np.random.default_rng(7)
    for trial in range(25):
        n = int(rng.integers(4, 9))
        X, y = _random_problem(rng, n)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        K = rbf_kernel(X, X, float(rng.choice([0.1, 1.0, 3.0])))
        alpha, _, _ = solve_dual(K, y, C)
        got = dual_objective(K, y, alpha)
        ref = dual_optimum(K, y, C)
        assert abs(got - ref) <= 1e-4 * abs(ref), (trial, got, ref)


def _check_kkt(K, y, C, alpha, rho, tol):
    assert np.all(alpha >= 0) and np.all(alpha <= C)
    assert abs(alpha @ y) < 1e-9
    f = K @ (alpha * y) - rho
    margin = y * f
    free = (alpha > 1e-9) & (alpha < C - 1e-9)
    assert np.all(np.abs(margin[free] - 1) < tol * 2)
    assert np.all(margin[alpha <= 1e-9] > 1 - tol * 2)
    assert np.all(margin[alpha >= C - 1e-9] < 1 + tol * 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 20), st.sampled_from([0.01, 1.0, 100.0]))
def test_solution_satisfies_kkt(seed, n, C):
    rng = np.random.default_rng(seed)
    X, y = _random_problem(rng, n)
    K = rbf_kernel(X, X, 0.5)
    alpha, rho, _ = solve_dual(K, y, C, tol=1e-6)
    _check_kkt(K, y, C, alpha, rho, 1e-6)


def test_separable_pair():
    model = svm_train([[0.0], [1.0]], ["a", "b"], C=10.0, gamma=1.0, standardize=False)
    assert list(svm_predict(model, [[-1.0], [0.2], [0.8], [3.0]])) == ["a", "a", "b", "b"]
    assert model.decision_function([[0.5]])[0] == pytest.approx(0.0, abs=1e-6)


def test_xor():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([0, 0, 1, 1])
    model = svm_train(X, y, C=10.0, gamma=1.0)
    assert np.array_equal(svm_predict(model, X), y)


def test_conflicting_duplicates_stay_bounded():
    X = np.array([[0.0], [0.0], [1.0], [2.0]])
    y = np.array([1, -1, 1, -1])
    for C in (0.1, 1.0, 100.0):
        K = rbf_kernel(X, X, 1.0)
        alpha, _, _ = solve_dual(K, y.astype(float), C)
        assert np.all(alpha <= C + 1e-12)
        assert np.isfinite(dual_objective(K, y.astype(float), alpha))


def test_training_points_recovered_when_separable():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(-3, 0.5, (20, 3)), rng.normal(3, 0.5, (20, 3))])
    y = np.array(["NP"] * 20 + ["VP"] * 20)
    model = svm_train(X, y, C=1.0, gamma=0.1)
    assert np.array_equal(svm_predict(model, X), y)


def test_empty_input():
    model = svm_train([[0.0], [1.0]], [0, 1])
    assert svm_predict(model, np.zeros((0, 1))).shape == (0,)


def test_dimension_mismatch():
    model = svm_train([[0.0, 1.0], [1.0, 0.0]], [0, 1])
    with pytest.raises(SurprisalLabError, match="expected 2 features"):
        svm_predict(model, [[1.0, 2.0, 3.0]])


def test_rejects_bad_arguments():
    with pytest.raises(SurprisalLabError):
        svm_train([[0.0], [1.0]], [0, 0])
    with pytest.raises(SurprisalLabError):
        svm_train([[0.0], [1.0]], [0, 1], C=0)
    with pytest.raises(SurprisalLabError):
        svm_train([[0.0], [1.0], [2.0]], [0, 1])


def test_squared_distances_nonnegative():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(10, 4)) * 1e3
    D = squared_distances(A, A)
    assert np.all(D >= 0)
    assert np.allclose(D, ((A[:, None] - A[None]) ** 2).sum(-1), rtol=1e-9, atol=1e-6)


def test_matches_sklearn():
    sklearn_svm = pytest.importorskip("sklearn.svm")
    rng = np.random.default_rng(4)
    for _ in range(5):
        X = rng.normal(size=(40, 3))
        y = (X[:, 0] + 0.5 * rng.normal(size=40) > 0).astype(int)
        ours = svm_train(X, y, C=1.0, gamma=0.5, tol=1e-6, standardize=False)
        ref = sklearn_svm.SVC(C=1.0, gamma=0.5, tol=1e-6).fit(X, y)
        T = rng.normal(size=(30, 3))
        assert np.allclose(ours.decision_function(T), ref.decision_function(T), atol=1e-4)
        assert np.array_equal(svm_predict(ours, T), ref.predict(T))


def test_duplicating_non_support_point_changes_nothing():
    rng = np.random.default_rng(9)
    X = np.vstack([rng.normal(-2, 0.4, (10, 2)), rng.normal(2, 0.4, (10, 2))])
    y = np.array([0] * 10 + [1] * 10)
    m1 = svm_train(X, y, C=1.0, gamma=0.5, tol=1e-8, standardize=False)
    K = rbf_kernel(X, X, 0.5)
    alpha, _, _ = solve_dual(K, np.where(y == 1, 1.0, -1.0), 1.0, tol=1e-8)
    idle = int(np.flatnonzero(alpha == 0)[0])
    m2 = svm_train(np.vstack([X, X[idle]]), np.append(y, y[idle]), C=1.0, gamma=0.5, tol=1e-8, standardize=False)
    T = rng.normal(size=(20, 2)) * 2
    assert np.allclose(m1.decision_function(T), m2.decision_function(T), atol=1e-6)
