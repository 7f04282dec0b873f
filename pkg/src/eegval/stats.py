"""Evaluation metrics and statistical tests.

Confusion counts, sensitivity/specificity, Wald intervals, ROC/AUC,
continuity-corrected McNemar, Welch's t-test, Cohen's d and Bonferroni.
The positive class is label 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import errors


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self):
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    sensitivity: float
    specificity: float
    undefined: tuple = ()


def _labels(v):
    return np.asarray(v).astype(int).ravel()


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t, p = _labels(y_true), _labels(y_pred)
    if t.size != p.size:
        raise errors.LengthMismatch(f"{t.size} labels vs {p.size} predictions")
    if t.size == 0:
        raise errors.EmptyInput("no predictions")
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fp=int(np.sum((t == 0) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, sensitivity and specificity; an undefined rate is NaN and named
    in ``undefined``."""
    if cm.total == 0:
        raise errors.EmptyInput("empty confusion matrix")
    undefined = []
    pos, neg = cm.tp + cm.fn, cm.tn + cm.fp
    if pos:
        sens = cm.tp / pos
    else:
        sens = math.nan
        undefined.append("sensitivity")
    if neg:
        spec = cm.tn / neg
    else:
        spec = math.nan
        undefined.append("specificity")
    return Metrics((cm.tp + cm.tn) / cm.total, sens, spec, tuple(undefined))


def wald_ci(accuracy: float, n: int, z: float = 1.96) -> tuple:
    if not 0 <= accuracy <= 1:
        raise errors.DataError("accuracy must lie in [0, 1]")
    if n < 1:
        raise errors.DataError("n must be >= 1")
    half = z * math.sqrt(accuracy * (1 - accuracy) / n)
    return max(0.0, accuracy - half), min(1.0, accuracy + half)


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    auc_pairwise: float

    def to_csv(self) -> str:
        lines = ["fpr,tpr,threshold"]
        for f, t, h in zip(self.fpr, self.tpr, self.thresholds):
            lines.append(f"{float(f)!r},{float(t)!r},{'inf' if math.isinf(h) else repr(float(h))}")
        return "\n".join(lines) + "\n"


def pairwise_auc(scores, labels) -> float:
    """P(score+ > score-) + 0.5 P(tie) over every positive/negative pair."""
    s = np.asarray(scores, dtype=np.float64)
    y = _labels(labels)
    pos, neg = s[y == 1], s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise errors.SingleClass("AUC needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def roc_and_auc(scores, labels) -> RocCurve:
    s = np.asarray(scores, dtype=np.float64)
    y = _labels(labels)
    if s.size != y.size:
        raise errors.LengthMismatch("scores and labels differ in length")
    P, N = int((y == 1).sum()), int((y == 0).sum())
    if P == 0 or N == 0:
        raise errors.SingleClass("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    # last index of each block of tied scores
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.size - 1]
    tps = np.cumsum(y_sorted == 1)[last]
    fps = np.cumsum(y_sorted == 0)[last]
    tpr = np.r_[0.0, tps / P]
    fpr = np.r_[0.0, fps / N]
    thresholds = np.r_[np.inf, s_sorted[last]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc, pairwise_auc(s, y))


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    chi2: float
    p_value: float


def chi2_sf_1dof(x: float) -> float:
    """Upper tail of the chi-square distribution with one degree of freedom."""
    return math.erfc(math.sqrt(max(x, 0.0) / 2.0))


def mcnemar(b: int, c: int) -> McNemarResult:
    """McNemar's test with the Edwards continuity correction."""
    if b < 0 or c < 0:
        raise errors.DataError("discordant counts must be >= 0")
    if b + c == 0:
        raise errors.NoDiscordantPairs("b + c = 0")
    chi2 = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    return McNemarResult(int(b), int(c), chi2, chi2_sf_1dof(chi2))


def discordant_counts(y_true, pred_a, pred_b) -> tuple:
    """``b``: A right and B wrong; ``c``: A wrong and B right."""
    t, a, b = _labels(y_true), _labels(pred_a), _labels(pred_b)
    if not t.size == a.size == b.size:
        raise errors.LengthMismatch("label and prediction vectors differ in length")
    ra, rb = a == t, b == t
    return int(np.sum(ra & ~rb)), int(np.sum(~ra & rb))


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t."""
    return float(special.stdtr(df, -t))


def welch_t(group_a, group_b) -> tuple:
    """Welch's unequal-variance t-test.

    Returns ``(t, p_two_sided, df)`` with Welch-Satterthwaite degrees of
    freedom.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise errors.DegenerateGroup("each group needs at least 2 values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    se2 = va + vb
    if not (np.isfinite(se2) and se2 > 0):
        raise errors.DegenerateGroup("both groups have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    p = min(1.0, 2.0 * t_sf(abs(t), df))
    return float(t), p, float(df)


def cohens_d(group_a, group_b) -> float:
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size + b.size < 3:
        raise errors.ZeroPooledSd("not enough values for a pooled sd")
    pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / (a.size + b.size - 2)
    if not pooled > 0:
        raise errors.ZeroPooledSd("pooled standard deviation is zero")
    return float((a.mean() - b.mean()) / math.sqrt(pooled))


def effect_label(d: float) -> str:
    ad = abs(d)
    if ad < 0.5:
        return "small"
    if ad < 0.8:
        return "medium"
    return "large"


def bonferroni(alpha: float, m: int) -> float:
    if not 0 < alpha < 1:
        raise errors.DataError("alpha must lie in (0, 1)")
    if m < 1:
        raise errors.DataError("m must be >= 1")
    return alpha / m


@dataclass(frozen=True)
class FeatureStat:
    name: str
    p_value: float
    cohens_d: float
    effect_label: str
    significant_after_bonferroni: bool
    t: float = 0.0

    def to_dict(self):
        return {"feature": self.name, "p_value": self.p_value, "cohens_d": self.cohens_d,
                "effect_size": self.effect_label, "t": self.t,
                "significant_after_bonferroni": self.significant_after_bonferroni}


def rank_features(values, names, labels, alpha: float = 0.05, m: int | None = None) -> list:
    """Welch p-value and Cohen's d (class 1 minus class 0) for every column.

    Sorted by ascending p-value, then larger ``|d|``, then name. The
    Bonferroni divisor ``m`` defaults to the number of columns.
    """
    X = np.asarray(values, dtype=np.float64)
    y = _labels(labels)
    if not np.any(y == 1) or not np.any(y == 0):
        raise errors.SingleClass("feature ranking needs both classes")
    m = X.shape[1] if m is None else m
    cut = bonferroni(alpha, m)
    out = []
    for j, name in enumerate(names):
        a, b = X[y == 1, j], X[y == 0, j]
        try:
            t, p, _ = welch_t(a, b)
            d = cohens_d(a, b)
        except errors.EegValError as exc:
            raise type(exc)(f"feature {name}: {exc}") from exc
        out.append(FeatureStat(name, p, d, effect_label(d), p < cut, t))
    out.sort(key=lambda s: (s.p_value, -abs(s.cohens_d), s.name))
    return out
