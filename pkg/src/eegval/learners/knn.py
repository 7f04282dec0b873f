import numpy as np

from .. import errors
from .base import BinaryClassifier, check_training_data


class KNNClassifier(BinaryClassifier):
    """k-nearest neighbours under Euclidean distance.

    Equal distances are broken by training-row order. The score is the
    fraction of neighbours labelled 1 minus 0.5.
    """

    family = "knn"

    def __init__(self, k=5):
        k = int(k)
        if k < 1 or k % 2 == 0:
            raise errors.InvalidParam(f"k must be a positive odd integer, got {k}")
        self.k = k

    def fit(self, X, y, seed=None):
        X, y = check_training_data(X, y)
        if self.k > X.shape[0]:
            raise errors.InvalidParam(f"k={self.k} exceeds {X.shape[0]} training rows")
        self.X_ = X
        self.y_ = y
        self.n_features_ = X.shape[1]
        return self

    def decision_function(self, X):
        X = self._check_input(X)
        d2 = ((X ** 2).sum(1)[:, None] + (self.X_ ** 2).sum(1)[None, :]
              - 2.0 * X @ self.X_.T)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        return self.y_[nearest].mean(axis=1) - 0.5

    def get_params(self):
        return {"k": self.k}

    def to_dict(self):
        return {"family": self.family, "params": self.get_params(),
                "X": self.X_.tolist(), "y": self.y_.tolist()}
