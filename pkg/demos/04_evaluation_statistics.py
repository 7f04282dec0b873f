"""
Pooled metrics, confidence intervals, ROC and McNemar
=====================================================

Evaluate two models with nested CV on the same folds, then compare them on
their pooled predictions.
"""
import numpy as np

from eegval.learners import ModelSpec
from eegval.pipeline import load_features, resolve_config
from eegval.stats import discordant_counts, mcnemar, roc_and_auc, wald_ci
from eegval.validation import make_folds, run_nested_cv

cfg = resolve_config(overrides=[("synth.n_subjects_per_class", 10)])
fm, _ = load_features(cfg, seed=0)
plan = make_folds(fm.labels, fm.subjects, 5, True, 0, fm.trial_ids)

specs = {"adaboost": ModelSpec("adaboost", {}, {"n_rounds": [25, 50]}),
         "knn": ModelSpec("knn", {}, {"k": [3, 7, 11]})}
results = {name: run_nested_cv(fm, spec, plan, 3, seed=0) for name, spec in specs.items()}

# %%
# Accuracy is the mean over outer folds. The Wald interval uses the pooled
# predictions.
for name, res in results.items():
    m = res.metrics()
    lo, hi = wald_ci(res.pooled_accuracy, len(fm))
    auc = roc_and_auc(res.scores, res.labels).auc
    print(f"{name:9s} acc {100 * res.accuracy:5.1f} ± {100 * res.accuracy_std:4.1f}  "
          f"CI ({100 * lo:.1f}, {100 * hi:.1f})  AUC {auc:.3f}  "
          f"sens {100 * m.sensitivity:.1f}  spec {100 * m.specificity:.1f}")

# %%
# McNemar's test with continuity correction on the discordant pairs.
a, b = results["adaboost"], results["knn"]
n01, n10 = discordant_counts(fm.labels, a.predictions, b.predictions)
r = mcnemar(n01, n10)
print(f"b={n01} c={n10} chi2={r.chi2:.2f} p={r.p_value:.3g}")

# %%
# The ROC points are plot-ready.
roc = roc_and_auc(a.scores, a.labels)
print(roc.to_csv().splitlines()[:4])
