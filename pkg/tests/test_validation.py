import numpy as np
import pytest

from eegval import errors
from eegval.features import FeatureMatrix, fit_preprocessor
from eegval.learners import ModelSpec, make_model
from eegval.validation import (NESTED, STANDARD, compare_protocols, derive_seed, grid_scores,
                               make_folds, run_nested_cv, run_standard_cv_global_tuning)


def subject_layout(n_per_class, trials):
    subjects, labels = [], []
    for label, prefix in ((1, "a"), (0, "c")):
        for s in range(n_per_class):
            subjects += [f"{prefix}{s}"] * trials
            labels += [label] * trials
    return np.array(subjects), np.array(labels)


def test_grouped_folds_two_subjects_each():
    subjects, labels = subject_layout(5, 15)
    plan = make_folds(labels, subjects, 5, grouped=True, seed=0)
    assert plan.sizes() == [30] * 5
    for f in range(5):
        te = plan.test_index(f)
        assert np.unique(subjects[te]).size == 2
        assert labels[te].sum() == 15


def test_ungrouped_folds_stratified():
    subjects, labels = subject_layout(10, 15)
    plan = make_folds(labels, subjects, 5, grouped=False, seed=1)
    assert plan.sizes() == [60] * 5
    for f in range(5):
        assert abs(labels[plan.test_index(f)].sum() - 30) <= 1


def test_too_few_groups():
    with pytest.raises(errors.TooFewGroups):
        make_folds([0, 0, 1], ["s1", "s2", "s3"], 5)
    with pytest.raises(errors.ConfigError):
        make_folds([0, 1], ["a", "b"], 1)


def test_fold_partition_and_atomicity_random_structures():
    rng = np.random.default_rng(0)
    for trial in range(100):
        n_groups = int(rng.integers(4, 25))
        sizes = rng.integers(1, 16, n_groups)
        subjects = np.repeat([f"s{g}" for g in range(n_groups)], sizes)
        # mostly single-class subjects, a few mixed
        g_label = rng.integers(0, 2, n_groups)
        labels = np.repeat(g_label, sizes)
        mixed = rng.random(labels.size) < 0.05
        labels[mixed] = 1 - labels[mixed]
        if np.unique(labels).size < 2:
            labels[0] = 1 - labels[0]
        k = int(rng.integers(2, min(n_groups, 6) + 1))
        plan = make_folds(labels, subjects, k, True, seed=trial)
        assert sum(plan.sizes()) == labels.size
        assert set(np.unique(plan.assignment)) <= set(range(k))
        for s in np.unique(subjects):
            assert np.unique(plan.assignment[subjects == s]).size == 1
        again = make_folds(labels, subjects, k, True, seed=trial)
        assert np.array_equal(plan.assignment, again.assignment)


def _plain_cv(fm, family, params, plan, local=True):
    """Oracle: straightforward per-fold fit/predict loop."""
    X, y = fm.values, fm.labels
    if not local:
        pre = fit_preprocessor(X)
        Z = pre.transform(X)
    accs, preds = [], np.zeros(len(fm), int)
    for f in range(plan.k):
        tr, te = plan.train_index(f), plan.test_index(f)
        if local:
            pre = fit_preprocessor(X[tr])
            A, B = pre.transform(X[tr]), pre.transform(X[te])
        else:
            A, B = Z[tr], Z[te]
        m = make_model(family, params).fit(A, y[tr], seed=derive_seed(0, f))
        p = m.predict(B)
        preds[te] = p
        accs.append(np.mean(p == y[te]))
    return np.array(accs), preds


@pytest.mark.parametrize("family,params", [("knn", {"k": 3}), ("svm_linear", {"C": 1.0})])
def test_single_point_grids_reduce_to_plain_cv(small_fm, family, params):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 0, small_fm.trial_ids)
    spec = ModelSpec(family, params, {})
    nested = run_nested_cv(small_fm, spec, plan, 3, seed=0)
    acc, preds = _plain_cv(small_fm, family, params, plan, local=True)
    np.testing.assert_allclose(nested.fold_accuracies, acc)
    assert np.array_equal(nested.predictions, preds)
    std = run_standard_cv_global_tuning(small_fm, spec, plan, seed=0)
    acc, preds = _plain_cv(small_fm, family, params, plan, local=False)
    np.testing.assert_allclose(std.fold_accuracies, acc)
    assert np.array_equal(std.predictions, preds)


def test_standard_selector_removes_duplicate_in_every_fold(small_fm):
    fm = FeatureMatrix(np.column_stack([small_fm.values, small_fm.values[:, 3]]),
                       list(small_fm.names) + ["dup"], small_fm.subjects, small_fm.labels,
                       small_fm.trial_ids)
    plan = make_folds(fm.labels, fm.subjects, 4, True, 0, fm.trial_ids)
    res = run_standard_cv_global_tuning(fm, ModelSpec("knn", {"k": 3}, {}), plan)
    masks = {fr.kept_features for fr in res.folds}
    assert len(masks) == 1
    assert fm.shape[1] - 1 not in masks.pop()


def test_standard_picks_best_grid_point(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 0, small_fm.trial_ids)
    spec = ModelSpec("knn", {}, {"k": [1, 3, 5, 7]})
    res = run_standard_cv_global_tuning(small_fm, spec, plan, seed=0)
    means = [g["mean_accuracy"] for g in res.grid_accuracy]
    best = int(np.argmax(means))
    assert res.folds[0].chosen_params == spec.grid_points()[best]
    assert res.accuracy == pytest.approx(max(means))
    assert res.protocol == STANDARD


def test_nested_outer_test_rows_never_reach_fits(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 0, small_fm.trial_ids)
    spec = ModelSpec("svm_linear", {}, {"C": [0.1, 1.0, 10.0]})
    clean = run_nested_cv(small_fm, spec, plan, 2, seed=4)
    poisoned_values = small_fm.values.copy()
    te = plan.test_index(0)
    # canary: identical huge values in columns 0 and 1 on the outer-test rows only
    z = 1e4 * np.random.default_rng(0).standard_normal(te.size)
    poisoned_values[te, 0] = z
    poisoned_values[te, 1] = z
    poisoned = small_fm.with_values(poisoned_values)
    dirty = run_nested_cv(poisoned, spec, plan, 2, seed=4)
    assert dirty.folds[0].kept_features == clean.folds[0].kept_features
    assert dirty.folds[0].chosen_params == clean.folds[0].chosen_params
    assert dirty.folds[0].inner_scores == clean.folds[0].inner_scores
    # the leaky protocol fits its mask on all rows, so the canary removes column 1
    s_dirty = run_standard_cv_global_tuning(poisoned, spec, plan)
    assert 1 in clean.folds[0].kept_features
    assert 1 not in s_dirty.folds[0].kept_features


def test_nested_is_deterministic_and_job_count_free(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 1, small_fm.trial_ids)
    spec = ModelSpec("random_forest", {"max_depth": 3}, {"n_trees": [5, 10]})
    a = run_nested_cv(small_fm, spec, plan, 2, seed=9)
    b = run_nested_cv(small_fm, spec, plan, 2, seed=9)
    c = run_nested_cv(small_fm, spec, plan, 2, seed=9, jobs=2)
    for other in (b, c):
        assert a.scores.tobytes() == other.scores.tobytes()
        assert [f.chosen_params for f in a.folds] == [f.chosen_params for f in other.folds]
        assert a.to_dict(small_fm) == other.to_dict(small_fm)
    assert a.protocol == NESTED


def test_reported_std_is_fold_sample_sd(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 2, small_fm.trial_ids)
    res = run_nested_cv(small_fm, ModelSpec("knn", {"k": 3}, {}), plan)
    acc = [np.mean(res.predictions[plan.test_index(f)] == small_fm.labels[plan.test_index(f)])
           for f in range(4)]
    assert res.accuracy_std == pytest.approx(np.std(acc, ddof=1))
    assert res.accuracy == pytest.approx(np.mean(acc))
    assert res.pooled_accuracy == pytest.approx(np.mean(res.predictions == small_fm.labels))


@pytest.mark.parametrize("family,grid", [("random_forest", {"n_trees": [3, 8], "max_depth": [2, None]}),
                                         ("adaboost", {"n_rounds": [4, 9]})])
def test_grid_scores_prefix_sharing_is_exact(small_fm, family, grid):
    X, y = small_fm.values[:30], small_fm.labels[:30]
    Q = small_fm.values[30:]
    spec = ModelSpec(family, {}, grid)
    shared = grid_scores(spec, X, y, Q, seed=3)
    for p, s in zip(spec.grid_points(), shared):
        alone = make_model(family, p).fit(X, y, seed=3).decision_function(Q)
        np.testing.assert_allclose(s, alone, rtol=0, atol=1e-12)


def test_inner_fold_infeasible():
    rng = np.random.default_rng(0)
    subjects = np.repeat(["c0", "c1", "a0", "a1", "a2", "a3"], 4)
    labels = np.array([0] * 8 + [1] * 16)
    fm = FeatureMatrix(rng.standard_normal((24, 3)), ["x", "y", "z"], subjects, labels)
    plan = make_folds(labels, subjects, 2, True, 0, fm.trial_ids)
    spec = ModelSpec("knn", {}, {"k": [1, 3]})
    with pytest.raises(errors.InnerFoldInfeasible):
        run_nested_cv(fm, spec, plan, 3)


def test_plan_must_match_matrix(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4)
    with pytest.raises(errors.DataError):
        run_nested_cv(small_fm, ModelSpec("knn", {"k": 3}, {}), plan)


def test_compare_protocols_report(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 0, small_fm.trial_ids)
    specs = [ModelSpec("adaboost", {}, {"n_rounds": [5, 10]}),
             ModelSpec("svm_rbf", {}, {"C": [1.0, 10.0], "gamma": [0.01, 0.1]})]
    rep = compare_protocols(small_fm, specs, plan, 2, seed=0)
    rows = rep.table()
    assert [r["model"] for r in rows] == ["adaboost", "svm_rbf"]
    for r, row in zip(rep.rows, rows):
        assert row["difference_pct"] == pytest.approx(row["standard_cv_pct"] - row["nested_cv_pct"],
                                                      abs=0.011)
        std, nst = rep.results[r.family]
        assert np.array_equal(std.outer_fold, nst.outer_fold)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "model,standard_cv_pct,nested_cv_pct,difference_pct"
    assert lines[1].split(",")[3][0] in "+-"
    with pytest.raises(errors.ConfigError):
        compare_protocols(small_fm, [], plan)


def test_predictions_csv_layout(small_fm):
    plan = make_folds(small_fm.labels, small_fm.subjects, 4, True, 0, small_fm.trial_ids)
    res = run_nested_cv(small_fm, ModelSpec("knn", {"k": 3}, {}), plan)
    lines = res.predictions_csv(small_fm).splitlines()
    assert lines[0] == "trial_id,subject,label,prediction,score,outer_fold"
    assert len(lines) == len(small_fm) + 1
