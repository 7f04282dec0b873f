from __future__ import annotations

import numpy as np

from .. import errors


def check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(int)
    if X.ndim != 2:
        raise errors.DimensionMismatch("X must be 2-D")
    if X.shape[0] != y.shape[0]:
        raise errors.DimensionMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < 2:
        raise errors.DataError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise errors.NonFiniteFeature("training features contain NaN or inf")
    if not np.all((y == 0) | (y == 1)):
        raise errors.DataError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise errors.SingleClassTraining("training set contains a single class")
    return X, y


class BinaryClassifier:
    """Common surface: ``decision_function`` is centred so 0 is the threshold."""

    family = None
    n_features_ = None

    def _check_input(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise errors.DimensionMismatch(
                f"model trained on {self.n_features_} features, got {X.shape[1]}")
        return X

    def decision_function(self, X):
        raise NotImplementedError

    def predict(self, X):
        # ties (score exactly 0) resolve to label 0
        return (self.decision_function(X) > 0).astype(int)

    def get_params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError
