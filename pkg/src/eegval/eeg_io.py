"""Reading UCI EEG trial files, quality control and dataset assembly.

The UCI alcoholism EEG database stores one trial per text file::

    # co2a0000364.rd
    # 120 trials, 64 chans, 416 samples 368 post_stim samples
    # 3.906000000000000 msecs uV
    # S1 obj , trial 0
    # FP1 chan 0
    0 FP1 0 -8.921
    0 FP1 1 -8.433
    ...

Data rows are ``<trial_no> <channel> <sample_index> <voltage_uv>``.
"""
from __future__ import annotations

import gzip
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import errors

DEFAULT_CHANNELS = (
    "FP1", "FP2", "FZ", "F3", "F4", "F7", "F8", "CZ", "C3", "C4",
    "T3", "T4", "T5", "T6", "PZ", "P3", "P4", "OZ", "O1", "O2",
)

DEFAULT_PREFIX_LABELS = {"co2a": 1, "co3a": 1, "co2c": 0, "co3c": 0}

UCI_SAMPLING_RATE = 256.0


@dataclass(frozen=True)
class EegTrial:
    """One multi-channel trial. ``samples`` has shape (C, N) in microvolts."""

    subject_id: str
    class_label: int
    channels: tuple
    samples: np.ndarray
    sampling_rate_hz: float = UCI_SAMPLING_RATE
    trial_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise errors.DataError("samples must be a C x N matrix")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", tuple(self.channels))
        if samples.shape[0] != len(self.channels):
            raise errors.DataError(
                f"{len(self.channels)} channel names for {samples.shape[0]} rows")
        if samples.shape[1] < 2:
            raise errors.DataError("a trial needs at least 2 samples")
        if len(set(self.channels)) != len(self.channels):
            raise errors.DataError("duplicate channel names")
        if not self.sampling_rate_hz > 0:
            raise errors.DataError("sampling rate must be positive")
        if self.class_label not in (0, 1):
            raise errors.DataError(f"class label {self.class_label!r} not in {{0, 1}}")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def channel(self, name: str) -> np.ndarray:
        return self.samples[self.channels.index(name)]

    def __eq__(self, other):
        if not isinstance(other, EegTrial):
            return NotImplemented
        return (self.subject_id == other.subject_id
                and self.class_label == other.class_label
                and self.channels == other.channels
                and self.sampling_rate_hz == other.sampling_rate_hz
                and self.trial_id == other.trial_id
                and np.array_equal(self.samples, other.samples))

    __hash__ = None


@dataclass(frozen=True)
class QcConfig:
    amplitude_limit_uv: float = 100.0
    flatline_min_run: int = 32
    reject_nonfinite: bool = True

    def __post_init__(self):
        if not self.amplitude_limit_uv > 0:
            raise errors.InvalidConfig("amplitude_limit_uv must be > 0")
        if int(self.flatline_min_run) < 2:
            raise errors.InvalidConfig("flatline_min_run must be >= 2")


@dataclass(frozen=True)
class QcVerdict:
    """Outcome of quality control. ``reasons`` holds ``(rule, channel)`` pairs."""

    accepted: bool
    reasons: tuple = ()

    def describe(self) -> list:
        return [f"{rule}({chan})" for rule, chan in self.reasons]


@dataclass
class Dataset:
    trials: list
    source: str = "uci"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [t.trial_id for t in self.trials]
        if len(set(ids)) != len(ids):
            raise errors.DataError("trial ids must be unique")
        _check_montage(self.trials)

    @property
    def class_counts(self) -> dict:
        counts = {0: 0, 1: 0}
        for t in self.trials:
            counts[t.class_label] += 1
        return counts

    def __len__(self):
        return len(self.trials)


def _check_montage(trials: Sequence[EegTrial]):
    if not trials:
        return
    first = trials[0]
    for t in trials[1:]:
        if t.channels != first.channels or t.sampling_rate_hz != first.sampling_rate_hz:
            raise errors.MixedMontage(
                f"trial {t.trial_id} differs in channels or sampling rate "
                f"from {first.trial_id}")


def label_from_subject(subject_id: str, prefix_labels: Mapping[str, int] | None = None) -> int:
    prefix_labels = DEFAULT_PREFIX_LABELS if prefix_labels is None else prefix_labels
    for prefix, label in prefix_labels.items():
        if subject_id.startswith(prefix):
            return int(label)
    raise errors.UnknownClassPrefix(f"subject id {subject_id!r} matches no class prefix")


_TRIAL_HEADER = re.compile(r"trial\s+(\d+)")


def parse_trial_file(text: str, sampling_rate_hz: float = UCI_SAMPLING_RATE,
                     prefix_labels: Mapping[str, int] | None = None) -> EegTrial:
    """Parse the text of one UCI trial file into an :class:`EegTrial`.

    Parameters
    ----------
    text : str
        File content; LF or CRLF line endings, any run of spaces/tabs as
        field separator.
    sampling_rate_hz : float
        Sampling rate recorded on the trial (256 Hz for the UCI data).
    prefix_labels : mapping, optional
        Subject-id prefix to class label. Defaults to ``co2a``/``co3a`` -> 1
        and ``co2c``/``co3c`` -> 0.
    """
    subject_id = None
    header_trial = None
    channels: list = []
    blocks: dict = {}
    trial_no = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if subject_id is None and body:
                subject_id = body.split()[0]
                if subject_id.endswith(".rd"):
                    subject_id = subject_id[:-3]
            m = _TRIAL_HEADER.search(body)
            if m and header_trial is None:
                header_trial = m.group(1)
            continue
        fields = line.split()
        if len(fields) != 4:
            raise errors.MalformedLine(lineno, raw)
        try:
            value = float(fields[3])
            int(fields[2])
        except ValueError:
            raise errors.MalformedLine(lineno, raw) from None
        name = fields[1]
        if trial_no is None:
            trial_no = fields[0]
        if name not in blocks:
            blocks[name] = []
            channels.append(name)
        blocks[name].append(value)

    if not channels:
        raise errors.EmptyFile("file contains no data rows")
    if subject_id is None:
        raise errors.DataError("file header carries no subject id")

    lengths = {name: len(v) for name, v in blocks.items()}
    if len(set(lengths.values())) != 1:
        raise errors.InconsistentSampleCount(f"unequal channel block lengths: {lengths}")

    label = label_from_subject(subject_id, prefix_labels)
    trial_no = header_trial if header_trial is not None else trial_no
    return EegTrial(
        subject_id=subject_id,
        class_label=label,
        channels=tuple(channels),
        samples=np.array([blocks[c] for c in channels]),
        sampling_rate_hz=sampling_rate_hz,
        trial_id=f"{subject_id}_{trial_no}",
    )


def serialize_trial(trial: EegTrial) -> str:
    """Render a trial in UCI text format (inverse of :func:`parse_trial_file`)."""
    trial_no = trial.trial_id.rsplit("_", 1)[-1] if "_" in trial.trial_id else "0"
    C, N = trial.samples.shape
    lines = [
        f"# {trial.subject_id}.rd",
        f"# 1 trials, {C} chans, {N} samples {N} post_stim samples",
        f"# {1000.0 / trial.sampling_rate_hz:.15f} msecs uV",
        f"# S1 obj , trial {trial_no}",
    ]
    for k, name in enumerate(trial.channels):
        lines.append(f"# {name} chan {k}")
        # repr keeps float round-trip exact
        lines.extend(f"{trial_no} {name} {i} {float(v)!r}"
                     for i, v in enumerate(trial.samples[k]))
    return "\n".join(lines) + "\n"


def read_trial_file(path, **kwargs) -> EegTrial:
    """Read a trial from disk; gzip content is detected from the magic bytes."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return parse_trial_file(raw.decode("ascii", errors="replace"), **kwargs)


def _longest_run(row: np.ndarray) -> int:
    if row.size == 0:
        return 0
    change = np.flatnonzero(row[1:] != row[:-1])
    edges = np.concatenate(([-1], change, [row.size - 1]))
    return int(np.diff(edges).max())


def apply_quality_control(trial: EegTrial, qc: QcConfig = QcConfig()) -> QcVerdict:
    reasons = []
    for name, row in zip(trial.channels, trial.samples):
        finite = np.isfinite(row)
        if qc.reject_nonfinite and not finite.all():
            reasons.append(("NonFinite", name))
        if np.any(np.abs(row[finite]) > qc.amplitude_limit_uv):
            reasons.append(("AmplitudeExceeded", name))
        if _longest_run(row) >= qc.flatline_min_run:
            reasons.append(("Flatline", name))
    return QcVerdict(accepted=not reasons, reasons=tuple(reasons))


def select_channels(trial: EegTrial, wanted: Sequence[str] = DEFAULT_CHANNELS) -> EegTrial:
    index = []
    for name in wanted:
        if name not in trial.channels:
            raise errors.MissingChannel(name)
        index.append(trial.channels.index(name))
    return EegTrial(
        subject_id=trial.subject_id,
        class_label=trial.class_label,
        channels=tuple(wanted),
        samples=trial.samples[index].copy(),
        sampling_rate_hz=trial.sampling_rate_hz,
        trial_id=trial.trial_id,
    )


def assemble_dataset(trials: Sequence[EegTrial], per_class_target: int = 150,
                     per_subject_cap: int = 15, seed: int = 0) -> Dataset:
    """Draw a class-balanced subset, at most ``per_subject_cap`` trials per subject.

    Sampling is without replacement and stratified by subject: subjects are
    visited round-robin in a seeded order and each visit takes one more of
    that subject's (seeded-shuffled) trials, so the subset spreads over as
    many subjects as possible.
    """
    _check_montage(trials)
    rng = np.random.default_rng(seed)
    chosen = []
    for label in (0, 1):
        by_subject: dict = {}
        for t in trials:
            if t.class_label == label:
                by_subject.setdefault(t.subject_id, []).append(t)
        available = sum(min(len(v), per_subject_cap) for v in by_subject.values())
        if available < per_class_target:
            raise errors.InsufficientTrials(label, available, per_class_target)
        subjects = sorted(by_subject)
        order = [subjects[i] for i in rng.permutation(len(subjects))]
        pools = {}
        for s in order:
            pool = sorted(by_subject[s], key=lambda t: t.trial_id)
            pools[s] = [pool[i] for i in rng.permutation(len(pool))][:per_subject_cap]
        taken = []
        depth = 0
        while len(taken) < per_class_target:
            for s in order:
                if depth < len(pools[s]):
                    taken.append(pools[s][depth])
                    if len(taken) == per_class_target:
                        break
            depth += 1
        chosen.extend(taken)
    chosen.sort(key=lambda t: t.trial_id)
    return Dataset(trials=chosen, metadata={
        "per_class_target": per_class_target,
        "per_subject_cap": per_subject_cap,
        "seed": seed,
    })


def load_directory(directory, qc: QcConfig = QcConfig(), wanted: Sequence[str] = DEFAULT_CHANNELS,
                   pattern: str = "*", **parse_kwargs):
    """Parse, quality-check and channel-select every trial file below ``directory``.

    Returns ``(accepted_trials, verdicts)`` where ``verdicts`` maps trial id
    to its :class:`QcVerdict`. Parse failures are re-raised with the file name.
    """
    accepted = []
    verdicts = {}
    files = sorted(p for p in Path(directory).rglob(pattern)
                   if p.is_file() and not p.name.endswith(".json"))
    for path in files:
        try:
            trial = read_trial_file(path, **parse_kwargs)
        except errors.EegValError as exc:
            raise errors.DataError(f"{path}: {exc}") from exc
        verdict = apply_quality_control(trial, qc)
        verdicts[trial.trial_id] = verdict
        if verdict.accepted:
            accepted.append(select_channels(trial, wanted))
    return accepted, verdicts


def manifest_dict(dataset: Dataset, verdicts: Mapping[str, QcVerdict] | None = None,
                  extra: Mapping | None = None) -> dict:
    doc = {
        "source": dataset.source,
        "n_trials": len(dataset),
        "class_counts": {str(k): v for k, v in dataset.class_counts.items()},
        "channels": list(dataset.trials[0].channels) if dataset.trials else [],
        "sampling_rate_hz": dataset.trials[0].sampling_rate_hz if dataset.trials else None,
        "trials": [
            {"trial_id": t.trial_id, "subject_id": t.subject_id, "label": t.class_label}
            for t in dataset.trials
        ],
    }
    if verdicts is not None:
        doc["qc"] = {
            tid: {"accepted": v.accepted, "reasons": v.describe()}
            for tid, v in sorted(verdicts.items())
        }
    doc.update(dataset.metadata)
    if extra:
        doc.update(extra)
    return doc


def write_manifest(path, dataset: Dataset, verdicts=None, extra=None):
    doc = manifest_dict(dataset, verdicts, extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc

