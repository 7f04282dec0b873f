"""Subject-grouped fold plans and the two evaluation protocols.

``run_standard_cv_global_tuning`` is the leaky baseline: feature selection
and standardization are fitted on the whole dataset and the reported score
is the best cross-validated grid point. ``run_nested_cv`` fits every
transform and every model on training rows only and tunes hyperparameters
in an inner loop.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .features import DEFAULT_CORRELATION_THRESHOLD, FeatureMatrix, fit_preprocessor
from .learners import ModelSpec, make_model
from .stats import confusion, metrics

STANDARD = "standard_global_tuning"
NESTED = "nested"

# grid parameters whose smaller values are prefixes of the largest fit
_PREFIX_PARAM = {"random_forest": "n_trees", "adaboost": "n_rounds"}


def derive_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: np.ndarray
    trial_ids: tuple
    grouped: bool
    seed: int

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def as_mapping(self) -> dict:
        return {t: int(f) for t, f in zip(self.trial_ids, self.assignment)}

    def sizes(self) -> list:
        return [int(np.sum(self.assignment == f)) for f in range(self.k)]


def make_folds(labels, subjects, k: int, grouped: bool = True, seed: int = 0,
               trial_ids=None) -> FoldPlan:
    """Greedy class-balanced fold assignment.

    Groups (subjects when ``grouped``, single trials otherwise) are visited
    largest first, ties in a seeded random order. Each group goes to the
    fold with the largest deficit, against an even per-class split, for
    the classes the group contains (weighted by its class counts); ties go
    to the lowest fold index. A single-class group therefore lands in the
    fold that is shortest of that class.
    """
    y = np.asarray(labels).astype(int)
    n = y.size
    subjects = np.asarray(subjects).astype(str)
    if trial_ids is None:
        trial_ids = [str(i) for i in range(n)]
    if k < 2:
        raise errors.InvalidConfig("k must be >= 2")
    if np.unique(y).size < 2:
        raise errors.SingleClass("fold planning needs both classes")
    if grouped:
        names, group_of = np.unique(subjects, return_inverse=True)
        n_groups = names.size
    else:
        group_of = np.arange(n)
        n_groups = n
    if k > n_groups:
        raise errors.TooFewGroups(f"k={k} folds but only {n_groups} groups")

    counts = np.zeros((n_groups, 2))
    np.add.at(counts, (group_of, y), 1)
    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(n_groups)
    order = shuffled[np.argsort(-counts[shuffled].sum(1), kind="stable")]

    target = counts.sum(0) / k
    fold_counts = np.zeros((k, 2))
    group_fold = np.empty(n_groups, dtype=int)
    for g in order:
        score = (target - fold_counts) @ counts[g]
        f = int(np.argmax(score))
        group_fold[g] = f
        fold_counts[f] += counts[g]
    return FoldPlan(k, group_fold[group_of], tuple(str(t) for t in trial_ids), grouped, seed)


@dataclass
class FoldResult:
    fold: int
    chosen_params: dict
    test_index: np.ndarray
    predictions: np.ndarray
    scores: np.ndarray
    accuracy: float
    kept_features: tuple = ()
    inner_scores: list = field(default_factory=list)

    def to_dict(self, fm: FeatureMatrix):
        return {
            "fold": self.fold,
            "chosen_params": self.chosen_params,
            "accuracy": self.accuracy,
            "n_test": int(self.test_index.size),
            "kept_features": len(self.kept_features),
            "trial_ids": fm.trial_ids[self.test_index].tolist(),
            "predictions": self.predictions.tolist(),
            "scores": self.scores.tolist(),
        }


@dataclass
class ProtocolResult:
    protocol: str
    family: str
    folds: list
    labels: np.ndarray
    predictions: np.ndarray
    scores: np.ndarray
    outer_fold: np.ndarray
    grid_accuracy: list = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def fold_accuracies(self) -> np.ndarray:
        return np.array([f.accuracy for f in self.folds])

    @property
    def accuracy(self) -> float:
        """Mean accuracy across outer folds."""
        return float(self.fold_accuracies.mean())

    @property
    def accuracy_std(self) -> float:
        """Sample standard deviation of the outer-fold accuracies."""
        acc = self.fold_accuracies
        return float(acc.std(ddof=1)) if acc.size > 1 else 0.0

    @property
    def pooled_accuracy(self) -> float:
        return float(np.mean(self.predictions == self.labels))

    def metrics(self):
        return metrics(confusion(self.labels, self.predictions))

    def to_dict(self, fm: FeatureMatrix, include_timing=False) -> dict:
        d = {
            "protocol": self.protocol,
            "family": self.family,
            "accuracy_mean": self.accuracy,
            "accuracy_std": self.accuracy_std,
            "pooled_accuracy": self.pooled_accuracy,
            "folds": [f.to_dict(fm) for f in self.folds],
            "grid_accuracy": self.grid_accuracy,
        }
        if include_timing:
            d["elapsed_s"] = self.elapsed_s
        return d

    def predictions_csv(self, fm: FeatureMatrix) -> str:
        lines = ["trial_id,subject,label,prediction,score,outer_fold"]
        for i in range(len(fm)):
            lines.append(f"{fm.trial_ids[i]},{fm.subjects[i]},{int(self.labels[i])},"
                         f"{int(self.predictions[i])},{float(self.scores[i])!r},"
                         f"{int(self.outer_fold[i])}")
        return "\n".join(lines) + "\n"


def grid_scores(spec: ModelSpec, Xtr, ytr, Xte, seed: int) -> list:
    """Test-set decision scores for every grid point, in grid order.

    For forests and boosting, points differing only in the ensemble size are
    served by one fit of the largest size, truncated; this is exact because
    tree ``i`` / round ``t`` does not depend on the total size.
    """
    points = spec.grid_points()
    prefix = _PREFIX_PARAM.get(spec.family)
    out = [None] * len(points)
    groups: dict = {}
    for i, p in enumerate(points):
        if prefix in p:
            key = tuple(sorted((k, repr(v)) for k, v in p.items() if k != prefix))
            groups.setdefault(key, []).append(i)
        else:
            out[i] = make_model(spec.family, p).fit(Xtr, ytr, seed=seed).decision_function(Xte)
    for members in groups.values():
        big = dict(points[members[0]])
        big[prefix] = max(points[i][prefix] for i in members)
        model = make_model(spec.family, big).fit(Xtr, ytr, seed=seed)
        for i in members:
            out[i] = model.prefix_decision_function(Xte, points[i][prefix])
    return out


def _predict(scores):
    return (np.asarray(scores) > 0).astype(int)


def _map(fn, tasks, jobs):
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*tasks)))


def _assemble(protocol, spec, fm, plan, folds, grid_accuracy, t0):
    n = len(fm)
    preds = np.full(n, -1)
    scores = np.zeros(n)
    outer = np.full(n, -1)
    for fr in folds:
        preds[fr.test_index] = fr.predictions
        scores[fr.test_index] = fr.scores
        outer[fr.test_index] = fr.fold
    if np.any(preds < 0):
        raise errors.DataError("fold plan does not cover every trial")
    return ProtocolResult(protocol, spec.family, folds, fm.labels.copy(), preds, scores,
                          outer, grid_accuracy, time.perf_counter() - t0)


def _check_plan(fm: FeatureMatrix, plan: FoldPlan):
    if plan.assignment.size != len(fm):
        raise errors.DimensionMismatch("fold plan and feature matrix differ in size")
    if tuple(fm.trial_ids) != plan.trial_ids:
        raise errors.DataError("fold plan was built for different trials")


def _standard_fold(spec, Z, y, plan, f, seed):
    tr, te = plan.train_index(f), plan.test_index(f)
    return grid_scores(spec, Z[tr], y[tr], Z[te], derive_seed(seed, f))


def run_standard_cv_global_tuning(fm: FeatureMatrix, spec: ModelSpec, plan: FoldPlan,
                                  threshold: float = DEFAULT_CORRELATION_THRESHOLD,
                                  seed: int = 0, jobs: int = 1) -> ProtocolResult:
    """Leaky baseline protocol.

    1. selector and standardizer are fitted once on all rows;
    2. every grid point is cross-validated on the transformed data;
    3. the point with the best mean fold accuracy wins (first on ties);
    4. that point's cross-validated accuracy and predictions are reported.
    """
    t0 = time.perf_counter()
    _check_plan(fm, plan)
    pre = fit_preprocessor(fm.values, threshold)
    Z = pre.transform(fm.values)
    y = fm.labels
    per_fold = _map(_standard_fold, [(spec, Z, y, plan, f, seed) for f in range(plan.k)], jobs)
    points = spec.grid_points()
    acc = np.array([[np.mean(_predict(per_fold[f][g]) == y[plan.test_index(f)])
                     for f in range(plan.k)] for g in range(len(points))])
    means = acc.mean(axis=1)
    best = int(np.argmax(means))
    folds = []
    for f in range(plan.k):
        te = plan.test_index(f)
        s = per_fold[f][best]
        folds.append(FoldResult(f, points[best], te, _predict(s), s, float(acc[best, f]),
                                pre.mask.kept_indices))
    grid_accuracy = [{"params": p, "mean_accuracy": float(m)} for p, m in zip(points, means)]
    return _assemble(STANDARD, spec, fm, plan, folds, grid_accuracy, t0)


def _inner_search(spec, X, y, subjects, k_inner, grouped, threshold, seed):
    points = spec.grid_points()
    if len(points) == 1:
        return points[0], []
    plan = make_folds(y, subjects, k_inner, grouped, seed)
    acc = np.zeros((len(points), k_inner))
    for g in range(k_inner):
        tr, te = plan.train_index(g), plan.test_index(g)
        if np.unique(y[tr]).size < 2:
            raise errors.InnerFoldInfeasible(
                f"inner fold {g}: training part holds a single class")
        pre = fit_preprocessor(X[tr], threshold)
        scores = grid_scores(spec, pre.transform(X[tr]), y[tr], pre.transform(X[te]),
                             derive_seed(seed, g))
        for i, s in enumerate(scores):
            acc[i, g] = np.mean(_predict(s) == y[te])
    means = acc.mean(axis=1)
    best = int(np.argmax(means))
    return points[best], [float(m) for m in means]


def _nested_fold(spec, fm, plan, f, k_inner, threshold, seed):
    tr, te = plan.train_index(f), plan.test_index(f)
    X, y = fm.values, fm.labels
    params, inner = _inner_search(spec, X[tr], y[tr], fm.subjects[tr], k_inner, plan.grouped,
                                  threshold, derive_seed(seed, f, 1))
    pre = fit_preprocessor(X[tr], threshold)
    model = make_model(spec.family, params).fit(pre.transform(X[tr]), y[tr],
                                                seed=derive_seed(seed, f))
    s = model.decision_function(pre.transform(X[te]))
    pred = _predict(s)
    return FoldResult(f, params, te, pred, s, float(np.mean(pred == y[te])),
                      pre.mask.kept_indices, inner)


def run_nested_cv(fm: FeatureMatrix, spec: ModelSpec, outer_plan: FoldPlan, k_inner: int = 3,
                  seed: int = 0, threshold: float = DEFAULT_CORRELATION_THRESHOLD,
                  jobs: int = 1) -> ProtocolResult:
    """Nested cross-validation with fold-local preprocessing.

    Inside each outer fold, selector and standardizer are fitted on the
    outer-training rows, an inner grouped ``k_inner``-fold search (with its
    own fold-local transforms) picks the grid point, the winner is refitted
    on all outer-training rows and scored once on the outer test fold.
    """
    if k_inner < 2:
        raise errors.InvalidConfig("k_inner must be >= 2")
    t0 = time.perf_counter()
    _check_plan(fm, outer_plan)
    tasks = [(spec, fm, outer_plan, f, k_inner, threshold, seed) for f in range(outer_plan.k)]
    folds = _map(_nested_fold, tasks, jobs)
    return _assemble(NESTED, spec, fm, outer_plan, folds, [], t0)


@dataclass
class LeakageRow:
    family: str
    standard_acc: float
    nested_acc: float

    @property
    def difference(self):
        return self.standard_acc - self.nested_acc


@dataclass
class LeakageReport:
    rows: list
    results: dict = field(default_factory=dict)

    def table(self) -> list:
        return [{"model": r.family,
                 "standard_cv_pct": round(100 * r.standard_acc, 2),
                 "nested_cv_pct": round(100 * r.nested_acc, 2),
                 "difference_pct": round(100 * r.difference, 2)} for r in self.rows]

    def to_csv(self) -> str:
        lines = ["model,standard_cv_pct,nested_cv_pct,difference_pct"]
        for r in self.table():
            lines.append(f"{r['model']},{r['standard_cv_pct']:.2f},{r['nested_cv_pct']:.2f},"
                         f"{r['difference_pct']:+.2f}")
        return "\n".join(lines) + "\n"


def compare_protocols(fm: FeatureMatrix, specs, plan: FoldPlan, k_inner: int = 3,
                      seed: int = 0, threshold: float = DEFAULT_CORRELATION_THRESHOLD,
                      jobs: int = 1) -> LeakageReport:
    """Run both protocols on the same outer folds for every spec."""
    specs = list(specs)
    if not specs:
        raise errors.ConfigError("compare_protocols needs at least one model spec")
    rows, results = [], {}
    for spec in specs:
        std = run_standard_cv_global_tuning(fm, spec, plan, threshold, seed, jobs)
        nst = run_nested_cv(fm, spec, plan, k_inner, seed, threshold, jobs)
        rows.append(LeakageRow(spec.family, std.accuracy, nst.accuracy))
        results[spec.family] = (std, nst)
    return LeakageReport(rows, results)
