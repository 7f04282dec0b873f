"""
The five classifiers
====================

Every learner shares a ``fit / decision_function / predict`` surface,
with ``predict`` equal to ``decision_function > 0``. Here each one is fitted
on two overlapping Gaussian blobs.
"""
import numpy as np

from eegval.learners import FAMILIES, default_grids, make_model

rng = np.random.default_rng(0)
n = 200
y = np.repeat([0, 1], n // 2)
X = rng.standard_normal((n, 4)) + 1.2 * y[:, None]
Xte = rng.standard_normal((n, 4)) + 1.2 * y[:, None]

params = {"knn": {"k": 7}, "svm_linear": {"C": 1.0}, "svm_rbf": {"C": 1.0, "gamma": 0.25},
          "random_forest": {"n_trees": 50, "max_depth": 5}, "adaboost": {"n_rounds": 50}}

# %%
# Test accuracy per family.
for family in FAMILIES:
    model = make_model(family, params[family]).fit(X, y, seed=0)
    acc = np.mean(model.predict(Xte) == y)
    print(f"{family:14s} {100 * acc:5.1f}%")

# %%
# The boosted ensemble exposes its per-round errors and the classic
# training-error bound.
boost = make_model("adaboost", {"n_rounds": 20}).fit(X, y)
print("train error", np.mean(boost.predict(X) != y), "bound", round(boost.training_error_bound(), 4))

# %%
# The SMO solver reports whether it reached the KKT tolerance.
svm = make_model("svm_rbf", params["svm_rbf"]).fit(X, y)
print("converged", svm.converged_, "support vectors", int(np.sum(svm.alpha_ > 1e-8)))

# %%
# Default hyperparameter grids used by the evaluation commands.
for family, spec in default_grids().items():
    print(family, len(spec.grid_points()), "grid points")
