"""Acceptance criteria, one test each, printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s``.
"""
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

import test_features
import test_learners
import test_stats
import test_validation
from eegval.cli import main
from eegval.stats import ConfusionMatrix, bonferroni, mcnemar, metrics, wald_ci
from eegval.pipeline import load_features, model_specs, resolve_config
from eegval.validation import compare_protocols, make_folds, run_nested_cv

# published pairwise comparisons: (b, c, chi2, p)
MCNEMAR_ROWS = [
    ("AdaBoost vs Random Forest", 27, 20, 0.77, 0.38),
    ("AdaBoost vs SVM RBF", 31, 30, 0.00, 1.00),
    ("AdaBoost vs SVM Linear", 45, 31, 2.22, 0.14),
    ("AdaBoost vs KNN", 54, 30, 6.30, 0.012),
    ("Random Forest vs SVM RBF", 32, 38, 0.36, 0.55),
    ("Random Forest vs KNN", 52, 35, 2.94, 0.086),
    ("SVM RBF vs SVM Linear", 36, 23, 2.44, 0.12),
]

# printed accuracy and 95% CI endpoints (percent), n = 300
CI_ROWS = [
    ("AdaBoost", 78.3, 73.7, 83.0),
    ("Random Forest", 76.0, 71.2, 80.8),
    ("SVM RBF", 78.0, 73.3, 82.7),
    ("SVM Linear", 73.7, 68.7, 78.7),
    ("KNN", 70.3, 65.2, 75.5),
]

UCI_DIR = os.environ.get("EEGVAL_UCI_DIR", "")


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  {name}  {detail}", flush=True)
        assert ok, detail
    return emit


def test_criterion_1_mcnemar_golden(report):
    t0 = time.perf_counter()
    worst = 0.0
    for _, b, c, chi2, p in MCNEMAR_ROWS:
        r = mcnemar(b, c)
        worst = max(worst, abs(r.chi2 - chi2), abs(r.p_value - p))
    elapsed = time.perf_counter() - t0
    report("1 McNemar golden rows", worst <= 0.01 and elapsed < 1.0,
           f"max abs error {worst:.4f}, {elapsed * 1e3:.1f} ms")


def test_criterion_2_metrics_golden(report):
    m = metrics(ConfusionMatrix(tp=118, tn=122, fp=28, fn=32))
    err = max(abs(100 * m.sensitivity - 78.67), abs(100 * m.specificity - 81.33))
    report("2 sensitivity/specificity golden", err <= 0.01,
           f"sens {100 * m.sensitivity:.3f}, spec {100 * m.specificity:.3f}")


def test_criterion_3_wald_ci_golden(report):
    worst = 0.0
    parts = []
    for name, acc, lo, hi in CI_ROWS:
        a, b = wald_ci(acc / 100, 300)
        worst = max(worst, abs(100 * a - lo), abs(100 * b - hi))
        parts.append(f"{name} ({100 * a:.2f}, {100 * b:.2f})")
    report("3 Wald CI golden rows", worst <= 0.1, f"max endpoint error {worst:.3f} pp; "
           + "; ".join(parts))


def test_criterion_4_bonferroni(report):
    v = bonferroni(0.05, 50)
    report("4 Bonferroni threshold", v == 0.001, f"{v!r}")


@pytest.mark.slow
def test_criterion_5_leakage_gap(report):
    cfg = resolve_config()
    specs = model_specs(cfg, ["svm_rbf", "adaboost"])
    gaps = {s.family: [] for s in specs}
    t0 = time.perf_counter()
    for seed in range(10):
        fm, _ = load_features(cfg, seed)
        plan = make_folds(fm.labels, fm.subjects, cfg["k_outer"], True, seed, fm.trial_ids)
        rep = compare_protocols(fm, specs, plan, cfg["k_inner"], seed)
        for r in rep.rows:
            gaps[r.family].append(r.difference)
    elapsed = time.perf_counter() - t0
    mean = {f: 100 * float(np.mean(g)) for f, g in gaps.items()}
    ok = (mean["svm_rbf"] >= 2.0 and mean["svm_rbf"] > mean["adaboost"]
          and min(mean.values()) >= -1.0 and elapsed < 600)
    report("5 leakage gap over 10 seeds", ok,
           f"svm_rbf {mean['svm_rbf']:+.2f} pp, adaboost {mean['adaboost']:+.2f} pp, "
           f"{elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_6_permutation_null(report):
    cfg = resolve_config(overrides=[("permute_labels", True)])
    specs = model_specs(cfg)
    correct = {s.family: 0 for s in specs}
    total = 0
    for seed in range(5):
        fm, _ = load_features(cfg, seed)
        plan = make_folds(fm.labels, fm.subjects, cfg["k_outer"], True, seed, fm.trial_ids)
        for spec in specs:
            res = run_nested_cv(fm, spec, plan, cfg["k_inner"], seed)
            correct[spec.family] += int(np.sum(res.predictions == res.labels))
        total += len(fm)
    lo = sps.binom.ppf(0.025, total, 0.5) / total
    hi = sps.binom.ppf(0.975, total, 0.5) / total
    acc = {f: c / total for f, c in correct.items()}
    ok = all(lo <= a <= hi for a in acc.values())
    report("6 permutation null", ok, f"band [{100 * lo:.1f}, {100 * hi:.1f}] over {total} "
           "predictions; " + ", ".join(f"{f} {100 * a:.1f}" for f, a in acc.items()))


PROPERTY_SUITES = [
    ("normalized band energies sum to 1", test_features.test_normalized_energies_sum_to_one_on_1000_trials),
    ("Parseval identity", test_features.test_parseval_on_random_signals),
    ("feature scale invariance", test_features.test_scale_invariance_per_channel),
    ("trapezoid AUC equals pair AUC", test_stats.test_trapezoid_matches_pair_oracle_200_instances),
    ("SMO KKT satisfaction", test_learners.test_svm_kkt_on_random_problems),
    ("AdaBoost training-error bound", test_learners.test_adaboost_training_error_bound),
    ("single-tree forest equals tree", test_learners.test_single_tree_forest_equals_tree),
    ("fold partition and subject atomicity",
     test_validation.test_fold_partition_and_atomicity_random_structures),
]


@pytest.mark.parametrize("name,suite", PROPERTY_SUITES, ids=[n for n, _ in PROPERTY_SUITES])
def test_criterion_7_property_suites(report, name, suite):
    t0 = time.perf_counter()
    try:
        suite()
        ok, detail = True, ""
    except AssertionError as exc:
        ok, detail = False, str(exc).splitlines()[0] if str(exc) else "assertion failed"
    elapsed = time.perf_counter() - t0
    report(f"7 {name}", ok and elapsed < 30, f"{elapsed:.2f} s {detail}")


def _tree_bytes(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.slow
def test_criterion_8_evaluate_is_deterministic(report, tmp_path):
    # same out dir both times: the resolved config, including out_dir, is embedded in reports
    out = tmp_path / "run"
    assert main(["evaluate", "--out-dir", str(out)]) == 0
    a = _tree_bytes(out)
    for p in out.rglob("*"):
        if p.is_file():
            p.unlink()
    assert main(["evaluate", "--out-dir", str(out)]) == 0
    b = _tree_bytes(out)
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    report("8 evaluate byte-identical", bool(a) and not differing,
           f"{len(a)} files compared" + (f", differing: {differing}" if differing else ""))


@pytest.mark.slow
@pytest.mark.skipif(not UCI_DIR, reason="set EEGVAL_UCI_DIR to a directory of UCI .rd files")
def test_criterion_9_real_data_smoke(report):
    cfg = resolve_config(overrides=[("data.source", "uci"), ("data.uci_dir", UCI_DIR)])
    fm, manifest = load_features(cfg, 0)
    plan = make_folds(fm.labels, fm.subjects, cfg["k_outer"], True, 0, fm.trial_ids)
    rep = compare_protocols(fm, model_specs(cfg), plan, cfg["k_inner"], 0)
    nested = {r.family: rep.results[r.family][1].pooled_accuracy for r in rep.rows}
    gap = float(np.mean([r.difference for r in rep.rows]))
    ok = (len(fm) >= 300 and fm.shape[1] == 160 and gap >= 0
          and all(0.55 <= a <= 0.95 for a in nested.values()))
    report("9 real-data smoke run", ok, f"{len(fm)} trials, mean gap {100 * gap:+.2f} pp; "
           + ", ".join(f"{f} {100 * a:.1f}" for f, a in nested.items()))
