"""Binary RBF-kernel SVM trained by sequential minimal optimization.

The dual problem is

    min  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  y^T a = 0,

with Q_ij = y_i y_j k(x_i, x_j) and k(x, z) = exp(-gamma |x - z|^2). Pairs
are chosen by maximal violation for the first index and second-order gain
for the second; the solver stops when the KKT gap drops below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import SurprisalLabError

TAU = 1e-12


@njit(cache=True)
def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    it = 0
    converged = False
    while it < max_iter:
        # first index: maximal violating pair, up side
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C and -grad[t] >= gmax:
                    gmax = -grad[t]
                    i = t
            else:
                if alpha[t] > 0 and grad[t] >= gmax:
                    gmax = grad[t]
                    i = t
        gmax2 = -np.inf
        j = -1
        best = np.inf
        for t in range(n):
            if y[t] > 0:
                if alpha[t] > 0:
                    diff = gmax + grad[t]
                    if grad[t] >= gmax2:
                        gmax2 = grad[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] - 2.0 * y[i] * K[i, t]
                        if quad <= 0:
                            quad = TAU
                        gain = -(diff * diff) / quad
                        if gain <= best:
                            best = gain
                            j = t
            else:
                if alpha[t] < C:
                    diff = gmax - grad[t]
                    if -grad[t] >= gmax2:
                        gmax2 = -grad[t]
                    if diff > 0 and i >= 0:
                        quad = K[i, i] + K[t, t] + 2.0 * y[i] * K[i, t]
                        if quad <= 0:
                            quad = TAU
                        gain = -(diff * diff) / quad
                        if gain <= best:
                            best = gain
                            j = t
        if gmax + gmax2 < tol or j == -1 or i == -1:
            converged = True
            break
        it += 1

        old_i = alpha[i]
        old_j = alpha[j]
        qij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * qij
            if quad <= 0:
                quad = TAU
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            grad[t] += y[t] * (y[i] * K[i, t] * di + y[j] * K[j, t] * dj)

    # bias from free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    acc = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            acc += yg
    if nfree > 0:
        rho = acc / nfree
    else:
        rho = (ub + lb) / 2.0
    return alpha, rho, it, converged


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * squared_distances(A, B))


def squared_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def dual_objective(K: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    ay = alpha * y
    return float(0.5 * ay @ K @ ay - alpha.sum())


@dataclass
class SvmModel:
    support_vectors: np.ndarray  # standardized rows
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float
    C: float
    mean: np.ndarray
    std: np.ndarray
    classes: tuple  # (negative label, positive label)
    iterations: int = 0

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            return np.zeros(0)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise SurprisalLabError(
                f"expected {self.mean.size} features, got shape {X.shape}"
            )
        Z = (X - self.mean) / self.std
        if self.support_vectors.shape[0] == 0:
            return np.full(Z.shape[0], self.bias)
        return rbf_kernel(Z, self.support_vectors, self.gamma) @ self.dual_coef + self.bias


def standardization(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std <= 1e-12] = 1.0
    return mean, std


def solve_dual(K: np.ndarray, y_pm: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 100_000):
    """Run SMO on a precomputed kernel matrix; labels must be +-1."""
    alpha, rho, it, converged = _smo(
        np.ascontiguousarray(K, dtype=np.float64), y_pm.astype(np.float64), float(C), float(tol), int(max_iter)
    )
    if not converged:
        raise SurprisalLabError(
            f"SMO did not converge in {max_iter} iterations (C={C}, n={y_pm.size})"
        )
    return alpha, rho, it


def _encode(y) -> tuple[np.ndarray, tuple]:
    y = np.asarray(y)
    classes = tuple(sorted(set(y.tolist())))
    if len(classes) != 2:
        raise SurprisalLabError(f"need exactly two classes, got {len(classes)}")
    return np.where(y == classes[1], 1.0, -1.0), classes


def svm_train(
    X,
    y,
    C: float = 1.0,
    gamma: float = 1.0,
    tol: float = 1e-3,
    max_iter: int = 100_000,
    standardize: bool = True,
) -> SvmModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise SurprisalLabError("X must be a 2-D array with one row per label")
    if C <= 0 or gamma <= 0:
        raise SurprisalLabError("C and gamma must be positive")
    y_pm, classes = _encode(y)
    if standardize:
        mean, std = standardization(X)
    else:
        mean, std = np.zeros(X.shape[1]), np.ones(X.shape[1])
    Z = (X - mean) / std
    K = rbf_kernel(Z, Z, gamma)
    alpha, rho, it = solve_dual(K, y_pm, C, tol, max_iter)
    sv = alpha > 0
    return SvmModel(Z[sv], (alpha * y_pm)[sv], -rho, gamma, C, mean, std, classes, it)


def svm_predict(model: SvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.array([], dtype=np.asarray(model.classes).dtype)
    scores = model.decision_function(X)
    neg, pos = model.classes
    return np.where(scores > 0, pos, neg)
