"""Per-trial feature extraction and fold-local feature transforms.

Each channel contributes eight features: mean, standard deviation and raw
kurtosis of the max-abs normalized signal, the four normalized band
energies (delta, theta, alpha, beta) and the theta/alpha energy ratio.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import errors
from .eeg_io import EegTrial

FEATURE_KINDS = (
    "mean", "std", "kurt",
    "nE_delta", "nE_theta", "nE_alpha", "nE_beta",
    "ratio_theta_alpha",
)

DEFAULT_EPSILON = 1e-10
DEFAULT_CORRELATION_THRESHOLD = 0.95


@dataclass(frozen=True)
class BandDefinition:
    name: str
    f_low_hz: float
    f_high_hz: float

    def __post_init__(self):
        if not 0 <= self.f_low_hz < self.f_high_hz:
            raise errors.InvalidConfig(
                f"band {self.name}: need 0 <= low < high, got "
                f"[{self.f_low_hz}, {self.f_high_hz})")


DEFAULT_BANDS = (
    BandDefinition("delta", 0.5, 4.0),
    BandDefinition("theta", 4.0, 8.0),
    BandDefinition("alpha", 8.0, 13.0),
    BandDefinition("beta", 13.0, 30.0),
)


def check_bands(bands: Sequence[BandDefinition]):
    names = [b.name for b in bands]
    if sorted(names) != sorted(("delta", "theta", "alpha", "beta")):
        raise errors.InvalidConfig(f"expected delta/theta/alpha/beta bands, got {names}")
    for a, b in zip(bands, bands[1:]):
        if b.f_low_hz < a.f_high_hz:
            raise errors.InvalidConfig(f"bands {a.name} and {b.name} overlap or are out of order")


def bands_from_mapping(mapping) -> tuple:
    bands = tuple(sorted((BandDefinition(k, float(v[0]), float(v[1]))
                          for k, v in mapping.items()), key=lambda b: b.f_low_hz))
    check_bands(bands)
    return bands


def normalize_maxabs(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak == 0:
        raise errors.AllZeroSignal("signal is identically zero")
    return x / peak


def stat_features(x) -> tuple:
    """Population mean, standard deviation and raw (non-excess) kurtosis."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise errors.DataError("need at least 2 samples")
    mu = x.mean()
    d = x - mu
    sigma = np.sqrt(np.mean(d ** 2))
    if sigma == 0:
        raise errors.ZeroVariance("zero variance, kurtosis undefined")
    kurt = np.mean((d / sigma) ** 4)
    return float(mu), float(sigma), float(kurt)


def spectrum_energy(x, fs_hz: float):
    """Energy ``|X(f)|**2`` of the plain DFT on bins ``0 .. N // 2``.

    Returns ``(frequency_hz, energy)`` arrays. Only the magnitude of the
    transform is used, so the index origin of the time sum does not matter.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 2:
        raise errors.DataError("need at least 2 samples")
    X = np.fft.rfft(x)
    energy = X.real ** 2 + X.imag ** 2
    freqs = np.arange(energy.size) * fs_hz / n
    return freqs, energy


def band_energies(freqs, energy, bands: Sequence[BandDefinition] = DEFAULT_BANDS) -> dict:
    """Sum bin energies over the half-open intervals ``[low, high)``, DC bin excluded."""
    freqs = np.asarray(freqs)
    energy = np.asarray(energy)
    out = {}
    for b in bands:
        sel = (freqs >= b.f_low_hz) & (freqs < b.f_high_hz) & (freqs > 0)
        out[b.name] = float(energy[sel].sum())
    return out


def normalize_band_energies(E: dict) -> dict:
    total = sum(E.values())
    if not total > 0:
        raise errors.ZeroTotalBandEnergy("total band energy is zero")
    return {k: v / total for k, v in E.items()}


def band_ratio(e_theta: float, e_alpha: float, epsilon: float = DEFAULT_EPSILON) -> float:
    return e_theta / (e_alpha + epsilon)


def feature_names(channels: Sequence[str]) -> list:
    return [f"{c}_{k}" for c in channels for k in FEATURE_KINDS]


def channel_features(x, fs_hz, bands=DEFAULT_BANDS, epsilon=DEFAULT_EPSILON,
                     stats_on_normalized=True) -> list:
    xn = normalize_maxabs(x)
    mu, sigma, kurt = stat_features(xn if stats_on_normalized else x)
    freqs, energy = spectrum_energy(xn, fs_hz)
    E = band_energies(freqs, energy, bands)
    nE = normalize_band_energies(E)
    ratio = band_ratio(E["theta"], E["alpha"], epsilon)
    return [mu, sigma, kurt, nE["delta"], nE["theta"], nE["alpha"], nE["beta"], ratio]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple


def extract_features(trial: EegTrial, bands=DEFAULT_BANDS, epsilon=DEFAULT_EPSILON,
                     stats_on_normalized=True) -> FeatureVector:
    values = []
    for name, row in zip(trial.channels, trial.samples):
        try:
            values.extend(channel_features(row, trial.sampling_rate_hz, bands, epsilon,
                                           stats_on_normalized))
        except errors.EegValError as exc:
            raise type(exc)(f"trial {trial.trial_id}, channel {name}: {exc}") from exc
    values = np.array(values)
    if not np.all(np.isfinite(values)):
        raise errors.NonFiniteFeature(f"trial {trial.trial_id}: non-finite feature")
    return FeatureVector(values=values, names=tuple(feature_names(trial.channels)))


class FeatureMatrix:
    """Rows are trials, columns are named features.

    Carries ``subjects``, ``labels`` and ``trial_ids`` alongside the values
    so row subsets stay aligned with their metadata.
    """

    def __init__(self, values, names, subjects, labels, trial_ids=None):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 2:
            raise errors.DimensionMismatch("feature values must be 2-D")
        self.names = tuple(names)
        self.subjects = np.asarray(subjects).astype(str)
        self.labels = np.asarray(labels).astype(int)
        if trial_ids is None:
            trial_ids = [f"row{i:05d}" for i in range(self.values.shape[0])]
        self.trial_ids = np.asarray(trial_ids).astype(str)
        n, d = self.values.shape
        if len(self.names) != d:
            raise errors.DimensionMismatch(f"{len(self.names)} names for {d} columns")
        if not (len(self.subjects) == len(self.labels) == len(self.trial_ids) == n):
            raise errors.DimensionMismatch("metadata length differs from row count")

    @property
    def shape(self):
        return self.values.shape

    def __len__(self):
        return self.values.shape[0]

    def rows(self, index) -> "FeatureMatrix":
        index = np.asarray(index)
        return FeatureMatrix(self.values[index], self.names, self.subjects[index],
                             self.labels[index], self.trial_ids[index])

    def columns(self, index) -> "FeatureMatrix":
        index = list(index)
        return FeatureMatrix(self.values[:, index], [self.names[i] for i in index],
                             self.subjects, self.labels, self.trial_ids)

    def with_values(self, values) -> "FeatureMatrix":
        return FeatureMatrix(values, self.names, self.subjects, self.labels, self.trial_ids)

    def with_labels(self, labels) -> "FeatureMatrix":
        return FeatureMatrix(self.values, self.names, self.subjects, labels, self.trial_ids)

    def to_csv(self, path=None, include_trial_id=False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = list(self.names) + ["subject_id", "label"]
        if include_trial_id:
            head = ["trial_id"] + head
        w.writerow(head)
        for i in range(len(self)):
            row = [repr(float(v)) for v in self.values[i]] + [self.subjects[i], int(self.labels[i])]
            if include_trial_id:
                row = [self.trial_ids[i]] + row
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path, trial_ids=None) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], rows[1:]
        has_id = head[0] == "trial_id"
        if has_id:
            trial_ids = [r[0] for r in body]
            head = head[1:]
            body = [r[1:] for r in body]
        if head[-2:] != ["subject_id", "label"]:
            raise errors.DataError(f"{path}: expected trailing subject_id,label columns")
        names = head[:-2]
        values = np.array([[float(v) for v in r[:-2]] for r in body]).reshape(len(body), len(names))
        return cls(values, names, [r[-2] for r in body], [int(r[-1]) for r in body], trial_ids)

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "trial_ids": self.trial_ids.tolist(),
            "subjects": self.subjects.tolist(),
            "labels": self.labels.tolist(),
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "FeatureMatrix":
        return cls(np.array(d["values"], dtype=float).reshape(len(d["labels"]), len(d["names"])),
                   d["names"], d["subjects"], d["labels"], d["trial_ids"])


def build_feature_matrix(trials: Sequence[EegTrial], bands=DEFAULT_BANDS,
                         epsilon=DEFAULT_EPSILON, stats_on_normalized=True) -> FeatureMatrix:
    vecs = [extract_features(t, bands, epsilon, stats_on_normalized) for t in trials]
    if not vecs:
        raise errors.EmptyInput("no trials")
    return FeatureMatrix(
        np.vstack([v.values for v in vecs]),
        vecs[0].names,
        [t.subject_id for t in trials],
        [t.class_label for t in trials],
        [t.trial_id for t in trials],
    )


@dataclass(frozen=True)
class SelectionMask:
    kept_indices: tuple
    threshold: float
    n_features: int

    def to_dict(self):
        return {"kept_indices": list(self.kept_indices), "threshold": self.threshold,
                "n_features": self.n_features}


def _as_values(m):
    return m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)


def abs_correlation(X) -> np.ndarray:
    """Absolute Pearson correlation; pairs involving a constant column get 0."""
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    norm = np.sqrt((Xc ** 2).sum(axis=0))
    const = np.ptp(X, axis=0) == 0
    norm[const] = 1.0
    Z = Xc / norm
    R = np.minimum(np.abs(Z.T @ Z), 1.0)
    R[const, :] = 0.0
    R[:, const] = 0.0
    return R


def fit_selector(train, threshold: float = DEFAULT_CORRELATION_THRESHOLD) -> SelectionMask:
    """Greedy correlation filter: for each surviving feature in index order,
    drop every later feature whose |r| with it exceeds ``threshold``.

    An exact duplicate of a surviving column is always dropped, so with
    ``threshold=1.0`` only duplicates go.
    """
    if not 0 < threshold <= 1:
        raise errors.InvalidConfig("threshold must be in (0, 1]")
    X = _as_values(train)
    if X.shape[0] < 2:
        raise errors.DataError("selector needs at least 2 training rows")
    R = abs_correlation(X)
    d = X.shape[1]
    dropped = np.zeros(d, dtype=bool)
    for i in range(d):
        if dropped[i]:
            continue
        later = np.arange(i + 1, d)
        same = np.all(X[:, i + 1:] == X[:, [i]], axis=0)
        hit = later[((R[i, i + 1:] > threshold) | same) & ~dropped[i + 1:]]
        dropped[hit] = True
    return SelectionMask(tuple(int(i) for i in np.flatnonzero(~dropped)), float(threshold), d)


def apply_selector(mask: SelectionMask, matrix):
    d = _as_values(matrix).shape[1]
    if d != mask.n_features:
        raise errors.DimensionMismatch(f"mask fitted on {mask.n_features} columns, got {d}")
    if isinstance(matrix, FeatureMatrix):
        return matrix.columns(mask.kept_indices)
    return np.asarray(matrix)[:, list(mask.kept_indices)]


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.sd == 0


def fit_standardizer(train) -> Standardizer:
    X = _as_values(train)
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[np.ptp(X, axis=0) == 0] = 0.0
    return Standardizer(mean, sd)


def apply_standardizer(s: Standardizer, matrix):
    X = _as_values(matrix)
    if X.shape[1] != s.mean.size:
        raise errors.DimensionMismatch(
            f"standardizer fitted on {s.mean.size} columns, got {X.shape[1]}")
    safe = np.where(s.sd == 0, 1.0, s.sd)
    Z = (X - s.mean) / safe
    Z[:, s.sd == 0] = 0.0
    if isinstance(matrix, FeatureMatrix):
        return matrix.with_values(Z)
    return Z


@dataclass(frozen=True)
class Preprocessor:
    """Selector followed by standardizer, both fitted on the same rows."""

    mask: SelectionMask
    standardizer: Standardizer

    def transform(self, matrix):
        return apply_standardizer(self.standardizer, apply_selector(self.mask, matrix))


def fit_preprocessor(train, threshold: float = DEFAULT_CORRELATION_THRESHOLD) -> Preprocessor:
    mask = fit_selector(train, threshold)
    return Preprocessor(mask, fit_standardizer(apply_selector(mask, train)))
