"""Run configuration and the raw-data-to-feature-matrix pipeline."""
from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from . import errors
from .eeg_io import (DEFAULT_PREFIX_LABELS, DEFAULT_CHANNELS, QcConfig, assemble_dataset,
                     load_directory, manifest_dict)
from .features import (DEFAULT_BANDS, DEFAULT_CORRELATION_THRESHOLD, DEFAULT_EPSILON,
                       FeatureMatrix, bands_from_mapping, build_feature_matrix)
from .learners import FAMILIES, ModelSpec, default_grids
from .synth import SYNTH_PREFIX_LABELS, SynthConfig, generate_corpus

SOURCES = ("synthetic", "uci", "features_csv")


def default_config() -> dict:
    synth = SynthConfig().to_dict()
    synth.pop("seed")
    return {
        "data": {
            "source": "synthetic",
            "uci_dir": None,
            "pattern": "*",
            "features_csv": None,
            "manifest": None,
            "prefix_labels": {**DEFAULT_PREFIX_LABELS, **SYNTH_PREFIX_LABELS},
        },
        "synth": synth,
        "channels": list(DEFAULT_CHANNELS),
        "qc": {"amplitude_limit_uv": 100.0, "flatline_min_run": 32, "reject_nonfinite": True},
        "assembly": {"per_class_target": 150, "per_subject_cap": 15},
        "bands": {b.name: [b.f_low_hz, b.f_high_hz] for b in DEFAULT_BANDS},
        "epsilon": DEFAULT_EPSILON,
        "stats_on_normalized": True,
        "correlation_threshold": DEFAULT_CORRELATION_THRESHOLD,
        "models": list(FAMILIES),
        "grids": {},
        "k_outer": 5,
        "k_inner": 3,
        "grouped": True,
        "seed": 0,
        "seeds": None,
        "permute_labels": False,
        "alpha": 0.05,
        "bonferroni_m": None,
        "rank_after_selection": True,
        "top_k": 2,
        "out_dir": "eegval_out",
        "jobs": 1,
    }


def _merge(base: dict, over: dict, path=""):
    for k, v in over.items():
        if k not in base:
            raise errors.ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict) and k not in ("grids", "prefix_labels"):
            _merge(base[k], v, path + k + ".")
        else:
            base[k] = v


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(cfg: dict, dotted: str, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise errors.ConfigError(f"unknown config key {dotted!r}")
        node = node[k]
    if keys[-1] not in node and node is not cfg.get("grids"):
        raise errors.ConfigError(f"unknown config key {dotted!r}")
    node[keys[-1]] = value


def resolve_config(path=None, overrides=()) -> dict:
    """Defaults, then the JSON config file, then ``(dotted_key, value)`` overrides."""
    cfg = default_config()
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise errors.ConfigError(f"cannot read config {path}: {exc}") from exc
        _merge(cfg, doc)
    for key, value in overrides:
        set_dotted(cfg, key, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    src = cfg["data"]["source"]
    if src not in SOURCES:
        raise errors.ConfigError(f"data.source must be one of {SOURCES}")
    if src == "uci" and not cfg["data"]["uci_dir"]:
        raise errors.ConfigError("data.source=uci needs data.uci_dir")
    if src == "features_csv" and not cfg["data"]["features_csv"]:
        raise errors.ConfigError("data.source=features_csv needs data.features_csv")
    if int(cfg["k_outer"]) < 2 or int(cfg["k_inner"]) < 2:
        raise errors.ConfigError("k_outer and k_inner must be >= 2")
    for m in cfg["models"]:
        if m not in FAMILIES:
            raise errors.ConfigError(f"unknown model family {m!r}")


def model_specs(cfg: dict, families=None) -> list:
    grids = default_grids()
    out = []
    for fam in (families if families is not None else cfg["models"]):
        if fam not in grids:
            raise errors.ConfigError(f"unknown model family {fam!r}")
        spec = grids[fam]
        if fam in cfg["grids"]:
            spec = ModelSpec.from_dict({"family": fam, **cfg["grids"][fam]})
        out.append(spec)
    return out


def synth_config(cfg: dict, seed: int) -> SynthConfig:
    return SynthConfig.from_dict({**cfg["synth"], "seed": int(seed)})


def load_features(cfg: dict, seed: int):
    """Build the feature matrix for ``cfg``.

    Returns ``(feature_matrix, manifest)``. For a synthetic source the
    corpus is regenerated from ``seed``; for UCI data ``seed`` drives the
    balanced subset draw.
    """
    data = cfg["data"]
    bands = bands_from_mapping(cfg["bands"])
    assembly = cfg["assembly"]
    verdicts = None
    if data["source"] == "features_csv":
        ids = None
        if data.get("manifest"):
            doc = json.loads(Path(data["manifest"]).read_text())
            ids = [t["trial_id"] for t in doc["trials"]]
        fm = FeatureMatrix.from_csv(data["features_csv"], trial_ids=ids)
        manifest = {"source": "features_csv", "path": str(data["features_csv"]),
                    "n_trials": len(fm)}
    else:
        if data["source"] == "synthetic":
            sc = synth_config(cfg, seed)
            trials = generate_corpus(sc).trials
            extra = {"synth_config": sc.to_dict()}
            source = "synthetic"
        else:
            qc = QcConfig(**cfg["qc"])
            trials, verdicts = load_directory(data["uci_dir"], qc, cfg["channels"],
                                              pattern=data["pattern"],
                                              prefix_labels=data["prefix_labels"])
            extra = {}
            source = "uci"
        ds = assemble_dataset(trials, int(assembly["per_class_target"]),
                              int(assembly["per_subject_cap"]), seed)
        ds.source = source
        fm = build_feature_matrix(ds.trials, bands, float(cfg["epsilon"]),
                                  bool(cfg["stats_on_normalized"]))
        manifest = manifest_dict(ds, verdicts, extra)
    if cfg["permute_labels"]:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7919]))
        fm = fm.with_labels(rng.permutation(fm.labels))
        manifest["permuted_labels"] = True
    return fm, manifest


def config_copy(cfg):
    return copy.deepcopy(cfg)
