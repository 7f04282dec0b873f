"""Seeded synthetic EEG corpora.

Each channel is a sum of one sinusoid per frequency band plus white
Gaussian noise. Band amplitudes are scaled by a per-subject log-normal
factor (shared by every trial of that subject) and, for class 1, the beta
amplitude is multiplied by ``beta_boost_alcoholic``.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .eeg_io import DEFAULT_CHANNELS, Dataset, EegTrial

SYNTH_PREFIX_LABELS = {"syna": 1, "sync": 0}

BAND_ORDER = ("delta", "theta", "alpha", "beta")
DEFAULT_BAND_EDGES = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 13.0),
    "beta": (13.0, 30.0),
}


def _default_amps():
    return {"delta": 10.0, "theta": 8.0, "alpha": 12.0, "beta": 6.0}


@dataclass(frozen=True)
class SynthConfig:
    n_subjects_per_class: int = 20
    trials_per_subject: int = 15
    channels: tuple = DEFAULT_CHANNELS
    n_samples: int = 256
    fs_hz: float = 256.0
    beta_boost_alcoholic: float = 1.6
    subject_effect_sd: float = 0.15
    noise_sd_uv: float = 4.0
    base_band_amps_uv: dict = field(default_factory=_default_amps)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "base_band_amps_uv", dict(self.base_band_amps_uv))
        self.validate()

    def validate(self):
        if self.n_subjects_per_class < 1 or self.trials_per_subject < 1:
            raise errors.InvalidConfig("need at least one subject and one trial per subject")
        if self.n_samples < 2:
            raise errors.InvalidConfig("n_samples must be >= 2")
        if not self.fs_hz > 0:
            raise errors.InvalidConfig("fs_hz must be > 0")
        if self.beta_boost_alcoholic < 1:
            raise errors.InvalidConfig("beta_boost_alcoholic must be >= 1")
        if self.subject_effect_sd < 0 or self.noise_sd_uv < 0:
            raise errors.InvalidConfig("standard deviations must be >= 0")
        unknown = set(self.base_band_amps_uv) - set(BAND_ORDER)
        if unknown:
            raise errors.InvalidConfig(f"unknown bands {sorted(unknown)}")
        if any(a < 0 for a in self.base_band_amps_uv.values()):
            raise errors.InvalidConfig("band amplitudes must be >= 0")
        if len(set(self.channels)) != len(self.channels) or not self.channels:
            raise errors.InvalidConfig("channel names must be unique and non-empty")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise errors.InvalidConfig(f"unknown synth fields {sorted(extra)}")
        return cls(**d)


def subject_id_for(label: int, index: int) -> str:
    return f"syn{'a' if label == 1 else 'c'}{index:04d}"


def subject_stream(seed: int, label: int, index: int) -> np.random.Generator:
    """Independent generator for one synthetic subject.

    Derived from ``(seed, label, index)`` alone so subjects can be generated
    in any order or in parallel with identical results.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, label, index]))


def subject_multipliers(cfg: SynthConfig, rng: np.random.Generator) -> dict:
    z = rng.standard_normal(len(BAND_ORDER))
    return {b: float(np.exp(cfg.subject_effect_sd * zb)) for b, zb in zip(BAND_ORDER, z)}


def generate_subject(cfg: SynthConfig, label: int, index: int) -> list:
    rng = subject_stream(cfg.seed, label, index)
    mult = subject_multipliers(cfg, rng)
    sid = subject_id_for(label, index)
    t = np.arange(cfg.n_samples) / cfg.fs_hz
    C = len(cfg.channels)
    bands = [b for b in BAND_ORDER if b in cfg.base_band_amps_uv]
    amps = {}
    for b in bands:
        a = cfg.base_band_amps_uv[b] * mult[b]
        if b == "beta" and label == 1:
            a *= cfg.beta_boost_alcoholic
        amps[b] = a
    trials = []
    for j in range(cfg.trials_per_subject):
        x = np.zeros((C, cfg.n_samples))
        for b in bands:
            lo, hi = DEFAULT_BAND_EDGES[b]
            freq = rng.uniform(lo, hi, size=(C, 1))
            phase = rng.uniform(0.0, 2 * np.pi, size=(C, 1))
            x += amps[b] * np.sin(2 * np.pi * freq * t + phase)
        x += cfg.noise_sd_uv * rng.standard_normal((C, cfg.n_samples))
        trials.append(EegTrial(
            subject_id=sid,
            class_label=label,
            channels=cfg.channels,
            samples=x,
            sampling_rate_hz=cfg.fs_hz,
            trial_id=f"{sid}_{j}",
        ))
    return trials


def generate_corpus(cfg: SynthConfig = SynthConfig()) -> Dataset:
    cfg.validate()
    trials = []
    for label in (0, 1):
        for i in range(cfg.n_subjects_per_class):
            trials.extend(generate_subject(cfg, label, i))
    return Dataset(trials=trials, source="synthetic", metadata={"synth_config": cfg.to_dict()})


def describe_generator(cfg: SynthConfig, machine_readable: bool = False) -> str:
    """Parameter dump of ``cfg``; JSON when ``machine_readable`` is set."""
    d = cfg.to_dict()
    if machine_readable:
        return json.dumps(d, sort_keys=True)
    lines = ["synthetic EEG generator (sinusoid per band + white noise)"]
    for key in sorted(d):
        lines.append(f"  {key}={d[key]}")
    return "\n".join(lines)


def parse_description(text: str) -> SynthConfig:
    return SynthConfig.from_dict(json.loads(text))
