"""From-scratch binary classifiers behind one fit / decision_function / predict surface.

>>> model = fit_model("knn", {"k": 1}, [[0.0], [1.0]], [0, 1])
>>> model.predict([[0.1], [0.9]]).tolist()
[0, 1]
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .. import errors
from .adaboost import AdaBoostStumps
from .base import BinaryClassifier
from .knn import KNNClassifier
from .svm import SVMClassifier, kkt_violations
from .tree import DecisionTree, RandomForest

FAMILIES = ("knn", "svm_linear", "svm_rbf", "random_forest", "adaboost")

_PARAM_NAMES = {
    "knn": {"k"},
    "svm_linear": {"C", "tol", "max_passes"},
    "svm_rbf": {"C", "gamma", "tol", "max_passes"},
    "random_forest": {"n_trees", "max_depth", "min_samples_leaf", "max_features", "bootstrap"},
    "adaboost": {"n_rounds"},
}


def make_model(family: str, params: dict) -> BinaryClassifier:
    if family not in FAMILIES:
        raise errors.InvalidParam(f"unknown model family {family!r}")
    unknown = set(params) - _PARAM_NAMES[family]
    if unknown:
        raise errors.InvalidParam(f"{family}: unknown parameters {sorted(unknown)}")
    if family == "knn":
        return KNNClassifier(**params)
    if family == "svm_linear":
        return SVMClassifier(kernel="linear", **params)
    if family == "svm_rbf":
        return SVMClassifier(kernel="rbf", **params)
    if family == "random_forest":
        return RandomForest(**params)
    return AdaBoostStumps(**params)


def fit_model(family: str, params: dict, X, y, seed: int = 0) -> BinaryClassifier:
    return make_model(family, params).fit(X, y, seed=seed)


@dataclass(frozen=True)
class ModelSpec:
    """A model family with fixed parameters and a search grid.

    Grid points are enumerated in declaration order, last parameter varying
    fastest; that order is also the tie-break order of grid search.
    """

    family: str
    fixed_params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise errors.InvalidParam(f"unknown model family {self.family!r}")
        for name, cands in self.grid.items():
            if len(cands) == 0:
                raise errors.InvalidParam(f"{self.family}: empty grid for {name}")
        for p in self.grid_points():
            make_model(self.family, p)

    def grid_points(self) -> list:
        names = list(self.grid)
        points = []
        for combo in itertools.product(*(self.grid[n] for n in names)):
            p = dict(self.fixed_params)
            p.update(zip(names, combo))
            points.append(p)
        return points

    def single_point(self, params: dict) -> "ModelSpec":
        return ModelSpec(self.family, dict(params), {})

    def to_dict(self):
        return {"family": self.family, "fixed_params": dict(self.fixed_params),
                "grid": {k: list(v) for k, v in self.grid.items()}}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], dict(d.get("fixed_params", {})),
                   {k: list(v) for k, v in d.get("grid", {}).items()})


def default_grids() -> dict:
    return {
        "knn": ModelSpec("knn", {}, {"k": [3, 5, 7, 9, 11]}),
        "svm_linear": ModelSpec("svm_linear", {}, {"C": [0.1, 1, 10, 100]}),
        "svm_rbf": ModelSpec("svm_rbf", {}, {"C": [0.1, 1, 10, 100],
                                             "gamma": [0.001, 0.01, 0.1, 1]}),
        "random_forest": ModelSpec("random_forest", {},
                                   {"n_trees": [50, 100, 200], "max_depth": [4, 8, None]}),
        "adaboost": ModelSpec("adaboost", {}, {"n_rounds": [50, 100, 200]}),
    }


def model_to_json(model: BinaryClassifier) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


__all__ = [
    "FAMILIES", "ModelSpec", "default_grids", "make_model", "fit_model", "model_to_json",
    "AdaBoostStumps", "BinaryClassifier", "DecisionTree", "KNNClassifier", "RandomForest",
    "SVMClassifier", "kkt_violations",
]
