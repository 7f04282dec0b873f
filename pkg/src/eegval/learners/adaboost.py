"""Discrete AdaBoost over depth-1 decision stumps."""
import math

import numpy as np

from .. import errors
from .base import BinaryClassifier, check_training_data

ALPHA_CAP = math.log(1e10)


class StumpSearch:
    """Exhaustive weighted stump search on presorted columns.

    A stump ``(feature, threshold, polarity)`` outputs ``polarity`` when
    ``x[feature] > threshold`` and ``-polarity`` otherwise. Thresholds sit
    at midpoints between distinct consecutive values; ``-inf`` gives the
    two constant classifiers.
    """

    def __init__(self, X, y_pm):
        self.n, self.d = X.shape
        self.order = np.argsort(X, axis=0, kind="stable")
        self.sorted_vals = np.take_along_axis(X, self.order, axis=0)
        self.y_sorted = y_pm[self.order]
        valid = np.ones((self.n + 1, self.d), dtype=bool)
        # split position p puts the p smallest values on the left
        valid[1:self.n] = self.sorted_vals[1:] > self.sorted_vals[:-1]
        valid[self.n] = False
        self.valid = valid
        mid = 0.5 * (self.sorted_vals[1:] + self.sorted_vals[:-1])
        mid = np.where(mid < self.sorted_vals[1:], mid, self.sorted_vals[:-1])
        self.thresholds = np.vstack([np.full((1, self.d), -np.inf), mid,
                                     np.full((1, self.d), np.inf)])

    def search(self, w):
        ws = w[self.order]
        pos = np.where(self.y_sorted > 0, ws, 0.0)
        neg = ws - pos
        zero = np.zeros((1, self.d))
        left_pos = np.vstack([zero, np.cumsum(pos, axis=0)])
        left_neg = np.vstack([zero, np.cumsum(neg, axis=0)])
        total_neg = left_neg[-1]
        total = w.sum()
        # polarity +1 errs on left positives and right negatives
        err_plus = left_pos + (total_neg - left_neg)
        err_minus = total - err_plus
        err_plus = np.where(self.valid, err_plus, np.inf)
        err_minus = np.where(self.valid, err_minus, np.inf)
        both = np.stack([err_plus, err_minus], axis=-1)  # (p, f, polarity)
        flat = np.transpose(both, (1, 0, 2)).reshape(-1)  # feature-major order
        k = int(np.argmin(flat))
        f, rest = divmod(k, 2 * (self.n + 1))
        p, s = divmod(rest, 2)
        return f, float(self.thresholds[p, f]), (1 if s == 0 else -1), float(flat[k])


def stump_predict(X, feature, threshold, polarity):
    return np.where(X[:, feature] > threshold, polarity, -polarity)


class AdaBoostStumps(BinaryClassifier):
    """Discrete AdaBoost; round weight ``0.5 * ln((1 - eps) / eps)``.

    Boosting stops early when a stump has zero weighted error (its weight
    is capped at ``ln(1e10)``) or when the best stump error reaches 0.5
    (that round is discarded).
    """

    family = "adaboost"

    def __init__(self, n_rounds=50):
        if int(n_rounds) < 1:
            raise errors.InvalidParam("n_rounds must be >= 1")
        self.n_rounds = int(n_rounds)

    def fit(self, X, y, seed=None):
        X, y = check_training_data(X, y)
        y_pm = np.where(y == 1, 1.0, -1.0)
        n = X.shape[0]
        w = np.full(n, 1.0 / n)
        search = StumpSearch(X, y_pm)
        self.stumps_ = []
        self.alphas_ = []
        self.errors_ = []
        for _ in range(self.n_rounds):
            f, thr, pol, eps = search.search(w)
            eps = max(eps, 0.0)
            if eps >= 0.5:
                break
            if eps <= 1e-15:
                alpha = ALPHA_CAP
            else:
                alpha = min(0.5 * math.log((1.0 - eps) / eps), ALPHA_CAP)
            self.stumps_.append((int(f), thr, int(pol)))
            self.alphas_.append(alpha)
            self.errors_.append(eps)
            if eps <= 1e-15:
                break
            h = stump_predict(X, f, thr, pol)
            w = w * np.exp(-alpha * y_pm * h)
            w /= w.sum()
        self.n_features_ = X.shape[1]
        return self

    def raw_score(self, X, n_rounds=None):
        X = self._check_input(X)
        s = np.zeros(X.shape[0])
        for (f, thr, pol), a in list(zip(self.stumps_, self.alphas_))[:n_rounds]:
            s += a * stump_predict(X, f, thr, pol)
        return s

    def decision_function(self, X):
        return self.prefix_decision_function(X, None)

    def prefix_decision_function(self, X, n_rounds):
        """Scores of the ensemble truncated to its first ``n_rounds`` rounds.

        Boosting is sequential and deterministic, so this equals a fresh
        fit with ``n_rounds``.
        """
        total = sum(self.alphas_[:n_rounds])
        if total == 0:
            return np.zeros(self._check_input(X).shape[0])
        return self.raw_score(X, n_rounds) / total

    def training_error_bound(self):
        return float(np.prod([2.0 * math.sqrt(e * (1.0 - e)) for e in self.errors_]))

    def get_params(self):
        return {"n_rounds": self.n_rounds}

    def to_dict(self):
        return {
            "family": self.family,
            "params": self.get_params(),
            "stumps": [{"feature": f, "threshold": t if math.isfinite(t) else str(t),
                        "polarity": p, "weight": a}
                       for (f, t, p), a in zip(self.stumps_, self.alphas_)],
            "round_errors": list(self.errors_),
        }
