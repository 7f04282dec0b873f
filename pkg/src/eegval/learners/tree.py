"""CART classification trees (Gini impurity) and random forests.

The tree grower is compiled with numba; nodes are stored in flat arrays
(``feature``, ``threshold``, ``left``, ``right``, ``value``) so a fitted
tree is cheap to evaluate and to serialize.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .. import errors
from .base import BinaryClassifier, check_training_data


@numba.njit(cache=True)
def _gini(n1, n):
    if n == 0:
        return 0.0
    p = n1 / n
    return 2.0 * p * (1.0 - p)


@numba.njit(cache=True)
def _grow(X, y, max_depth, min_samples_leaf, max_features, seed):
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)

    np.random.seed(seed)
    idx = np.arange(n)
    # stack entries: node id, start, end, depth
    stack = np.zeros((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    vals = np.empty(n)
    cls = np.empty(n, dtype=np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start
        n1 = 0
        for q in range(start, end):
            n1 += y[idx[q]]
        value[node] = n1 / m

        if n1 == 0 or n1 == m:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        if m < 2 * min_samples_leaf:
            continue

        if max_features < d:
            cand = np.sort(np.random.permutation(d)[:max_features])
        else:
            cand = np.arange(d)

        best_imp = np.inf
        best_f = -1
        best_thr = 0.0
        for f in cand:
            for q in range(m):
                vals[q] = X[idx[start + q], f]
            order = np.argsort(vals[:m], kind="mergesort")
            for q in range(m):
                cls[q] = y[idx[start + order[q]]]
            left1 = 0
            for p in range(1, m):
                left1 += cls[p - 1]
                if p < min_samples_leaf or m - p < min_samples_leaf:
                    continue
                a = vals[order[p - 1]]
                b = vals[order[p]]
                if not a < b:
                    continue
                imp = (p * _gini(left1, p) + (m - p) * _gini(n1 - left1, m - p)) / m
                if imp < best_imp:
                    best_imp = imp
                    best_f = f
                    thr = 0.5 * (a + b)
                    best_thr = thr if thr < b else a

        if best_f < 0:
            continue

        # partition idx[start:end] so rows going left come first
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[idx[lo], best_f] <= best_thr:
                lo += 1
            else:
                t = idx[lo]
                idx[lo] = idx[hi]
                idx[hi] = t
                hi -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        l_id = n_nodes
        r_id = n_nodes + 1
        n_nodes += 2
        left[node] = l_id
        right[node] = r_id
        # push right first so the left subtree is grown first
        stack[top, 0] = r_id
        stack[top, 1] = lo
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = l_id
        stack[top, 1] = start
        stack[top, 2] = lo
        stack[top, 3] = depth + 1
        top += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes])


@numba.njit(cache=True)
def _apply(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


def resolve_max_features(max_features, d):
    if max_features is None:
        return d
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    k = int(max_features)
    if not 1 <= k:
        raise errors.InvalidParam(f"max_features must be >= 1, got {max_features}")
    return min(k, d)


class DecisionTree(BinaryClassifier):
    """CART tree. Leaves store the class-1 fraction and vote for the majority
    class (an exact 50/50 leaf votes 0)."""

    family = "tree"

    def __init__(self, max_depth=None, min_samples_leaf=1, max_features=None):
        if max_depth is not None and int(max_depth) < 0:
            raise errors.InvalidParam("max_depth must be >= 0 or None")
        if int(min_samples_leaf) < 1:
            raise errors.InvalidParam("min_samples_leaf must be >= 1")
        self.max_depth = None if max_depth is None else int(max_depth)
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features

    def fit(self, X, y, seed=0):
        X, y = check_training_data(X, y)
        self._grow(X, y, seed)
        return self

    def _grow(self, X, y, seed):
        mtry = resolve_max_features(self.max_features, X.shape[1])
        depth = -1 if self.max_depth is None else self.max_depth
        (self.feature_, self.threshold_, self.left_, self.right_,
         self.value_) = _grow(np.ascontiguousarray(X), y.astype(np.int64), depth,
                              self.min_samples_leaf, mtry, int(seed) % (2 ** 32))
        self.n_features_ = X.shape[1]

    @property
    def n_nodes(self):
        return self.feature_.size

    def leaf_fraction(self, X):
        X = self._check_input(X)
        return _apply(np.ascontiguousarray(X), self.feature_, self.threshold_,
                      self.left_, self.right_, self.value_)

    def votes(self, X):
        return (self.leaf_fraction(X) > 0.5).astype(int)

    def decision_function(self, X):
        return self.votes(X) - 0.5

    def get_params(self):
        return {"max_depth": self.max_depth, "min_samples_leaf": self.min_samples_leaf}

    def to_dict(self):
        return {
            "feature": self.feature_.tolist(),
            "threshold": self.threshold_.tolist(),
            "left": self.left_.tolist(),
            "right": self.right_.tolist(),
            "value": self.value_.tolist(),
        }


def tree_seed(seed, index):
    """Seed of tree ``index``, independent of the forest size."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


class RandomForest(BinaryClassifier):
    """Bagged CART trees with per-split feature subsampling.

    Tree ``i`` depends only on ``(seed, i)``, so the first ``m`` trees of a
    forest are exactly an ``m``-tree forest grown with the same seed.
    """

    family = "random_forest"

    def __init__(self, n_trees=100, max_depth=None, min_samples_leaf=1,
                 max_features="sqrt", bootstrap=True):
        if int(n_trees) < 1:
            raise errors.InvalidParam("n_trees must be >= 1")
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        # validates depth/leaf params up front
        DecisionTree(max_depth, min_samples_leaf, max_features)

    def fit(self, X, y, seed=0):
        X, y = check_training_data(X, y)
        n = X.shape[0]
        self.trees_ = []
        for i in range(self.n_trees):
            s = tree_seed(seed, i)
            tree = DecisionTree(self.max_depth, self.min_samples_leaf, self.max_features)
            if self.bootstrap:
                rows = np.random.default_rng(s).integers(0, n, n)
                Xb, yb = X[rows], y[rows]
            else:
                Xb, yb = X, y
            tree._grow(Xb, yb, s)
            self.trees_.append(tree)
        self.n_features_ = X.shape[1]
        return self

    def vote_fraction(self, X, n_trees=None):
        X = self._check_input(X)
        trees = self.trees_ if n_trees is None else self.trees_[:n_trees]
        return np.mean([t.votes(X) for t in trees], axis=0)

    def decision_function(self, X):
        return self.vote_fraction(X) - 0.5

    def prefix_decision_function(self, X, n_trees):
        """Scores of the forest made of the first ``n_trees`` trees."""
        return self.vote_fraction(X, n_trees) - 0.5

    def get_params(self):
        return {"n_trees": self.n_trees, "max_depth": self.max_depth}

    def to_dict(self):
        return {"family": self.family, "params": self.get_params(),
                "max_features": self.max_features, "bootstrap": self.bootstrap,
                "trees": [t.to_dict() for t in self.trees_]}
