"""Soft-margin kernel SVM trained by sequential minimal optimization.

The dual problem

    maximize   sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    subject to 0 <= a_i <= C,  sum_i a_i y_i = 0

is solved two coefficients at a time. Each step picks the maximal
violating pair (Keerthi et al. 2001 / LIBSVM WSS1) and solves the
two-variable subproblem analytically. The stopping rule ``m(a) - M(a) < tol``
is a KKT certificate: at termination no coefficient violates its KKT
condition by more than ``tol``.
"""
from __future__ import annotations

import numpy as np

from .. import errors
from .base import BinaryClassifier, check_training_data


def linear_kernel(A, B):
    return A @ B.T


def rbf_kernel(A, B, gamma):
    sq = (A ** 2).sum(1)[:, None] + (B ** 2).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SVMClassifier(BinaryClassifier):
    """Binary SVM with a linear or RBF kernel.

    Parameters
    ----------
    C : float
        Box constraint, must be positive.
    kernel : {'linear', 'rbf'}
    gamma : float
        RBF width in ``exp(-gamma * ||u - v||^2)``; ignored for linear.
    tol : float
        KKT tolerance of the stopping rule.
    max_passes : int
        Iteration cap is ``max_passes * n_samples`` pair updates.
    record_trace : bool
        Keep the dual objective after every accepted update in ``trace_``.
    """

    def __init__(self, C=1.0, kernel="rbf", gamma=0.1, tol=1e-3, max_passes=200,
                 record_trace=False):
        if not C > 0:
            raise errors.InvalidParam(f"C must be > 0, got {C}")
        if kernel not in ("linear", "rbf"):
            raise errors.InvalidParam(f"unknown kernel {kernel!r}")
        if kernel == "rbf" and not gamma > 0:
            raise errors.InvalidParam(f"gamma must be > 0, got {gamma}")
        self.C = float(C)
        self.kernel = kernel
        self.gamma = float(gamma)
        self.tol = float(tol)
        self.max_passes = int(max_passes)
        self.record_trace = record_trace

    @property
    def family(self):
        return "svm_linear" if self.kernel == "linear" else "svm_rbf"

    def _kernel(self, A, B):
        if self.kernel == "linear":
            return linear_kernel(A, B)
        return rbf_kernel(A, B, self.gamma)

    def fit(self, X, y, seed=None):
        # seed unused: the solver is deterministic
        X, y01 = check_training_data(X, y)
        y = np.where(y01 == 1, 1.0, -1.0)
        n = X.shape[0]
        C = self.C
        K = self._kernel(X, X)
        Q = K * np.outer(y, y)
        alpha = np.zeros(n)
        G = -np.ones(n)  # gradient of 1/2 a'Qa - e'a
        trace = [0.0] if self.record_trace else None
        converged = False
        n_iter = 0
        for n_iter in range(self.max_passes * n):
            ygrad = -y * G
            up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
            low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
            i = np.flatnonzero(up)[np.argmax(ygrad[up])]
            j = np.flatnonzero(low)[np.argmin(ygrad[low])]
            gap = ygrad[i] - ygrad[j]
            if gap < self.tol:
                converged = True
                break
            # move a_i by y_i t and a_j by -y_j t, which keeps sum(a y) fixed
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            t = gap / eta if eta > 1e-12 else np.inf
            bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
            bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
            t = min(t, bound_i, bound_j)
            alpha[i] += y[i] * t
            alpha[j] -= y[j] * t
            if t == bound_i:
                alpha[i] = C if y[i] > 0 else 0.0
            if t == bound_j:
                alpha[j] = 0.0 if y[j] > 0 else C
            G += Q[:, i] * (y[i] * t) - Q[:, j] * (y[j] * t)
            if trace is not None:
                trace.append(0.5 * alpha.sum() - 0.5 * alpha @ G)
        np.clip(alpha, 0.0, C, out=alpha)

        ygrad = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        m_up, m_low = ygrad[up].max(), ygrad[low].min()
        free = (alpha > 0) & (alpha < C)
        # any b in [m_low, m_up] satisfies KKT within the final gap
        b = float(ygrad[free].mean()) if free.any() else 0.5 * (m_up + m_low)

        sv = alpha > 0
        self.n_features_ = X.shape[1]
        self.alpha_ = alpha
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = alpha[sv] * y[sv]
        self.intercept_ = b
        self.converged_ = converged
        self.n_iter_ = n_iter
        self.trace_ = np.array(trace) if trace is not None else None
        self.kkt_gap_ = float(m_up - m_low)
        if self.kernel == "linear":
            self.coef_ = self.dual_coef_ @ self.support_vectors_
        return self

    def decision_function(self, X):
        X = self._check_input(X)
        if self.kernel == "linear":
            return X @ self.coef_ + self.intercept_
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        return self._kernel(X, self.support_vectors_) @ self.dual_coef_ + self.intercept_

    def dual_objective(self, X, y):
        """Dual objective of the fitted coefficients on their training data."""
        ys = np.where(np.asarray(y) == 1, 1.0, -1.0)
        a = self.alpha_
        Q = self._kernel(np.asarray(X, float), np.asarray(X, float)) * np.outer(ys, ys)
        return float(a.sum() - 0.5 * a @ Q @ a)

    def get_params(self):
        p = {"C": self.C}
        if self.kernel == "rbf":
            p["gamma"] = self.gamma
        return p

    def to_dict(self):
        return {
            "family": self.family,
            "params": self.get_params(),
            "tol": self.tol,
            "converged": bool(self.converged_),
            "intercept": self.intercept_,
            "dual_coef": self.dual_coef_.tolist(),
            "support_vectors": self.support_vectors_.tolist(),
        }


def kkt_violations(model: SVMClassifier, X, y) -> np.ndarray:
    """Per-sample violation of the soft-margin KKT conditions.

    With margin ``m = y f(x)``: ``a = 0`` needs ``m >= 1``, ``0 < a < C``
    needs ``m = 1`` and ``a = C`` needs ``m <= 1``.
    """
    ys = np.where(np.asarray(y) == 1, 1.0, -1.0)
    m = ys * model.decision_function(X)
    a = model.alpha_
    C = model.C
    v = np.zeros_like(m)
    at0 = a <= 0
    atC = a >= C
    free = ~at0 & ~atC
    v[at0] = np.maximum(0.0, 1.0 - m[at0])
    v[atC] = np.maximum(0.0, m[atC] - 1.0)
    v[free] = np.abs(m[free] - 1.0)
    return v
