"""
Ranking features with Welch's t-test
====================================

Rank every surviving feature by its two-sided Welch p-value, attach
Cohen's d, and flag what survives Bonferroni correction.
"""
import numpy as np

from eegval.features import apply_selector, fit_selector
from eegval.pipeline import load_features, resolve_config
from eegval.stats import bonferroni, rank_features

cfg = resolve_config()
fm, _ = load_features(cfg, seed=0)

# %%
# Drop highly correlated columns first, then rank what is left.
mask = fit_selector(fm)
kept = apply_selector(mask, fm)
print(f"{fm.shape[1]} features, {kept.shape[1]} after correlation filtering")

ranked = rank_features(kept.values, kept.names, kept.labels)
cut = bonferroni(0.05, len(ranked))
print(f"Bonferroni threshold {cut:.2e}")
for s in ranked[:8]:
    print(f"{s.name:18s} p={s.p_value:.2e} d={s.cohens_d:+.2f} {s.effect_label:6s} "
          f"{'*' if s.significant_after_bonferroni else ''}")

# %%
# How many survive correction, and how many of those are beta features.
sig = [s for s in ranked if s.significant_after_bonferroni]
print(len(sig), "significant,", sum("beta" in s.name for s in sig), "of them beta")
