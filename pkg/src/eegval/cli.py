"""Batch command-line front end.

Every command resolves a run configuration (defaults, then ``--config``
JSON, then ``--seed``/``--out-dir``/``--jobs``, then dotted ``--key value``
overrides), writes CSV and JSON reports into the output directory and
embeds the resolved configuration in every JSON report. Primary outputs
carry no timings, so reruns are byte-identical.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import gzip
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, errors
from .eeg_io import manifest_dict, serialize_trial
from .features import apply_selector, fit_selector
from .pipeline import load_features, model_specs, parse_value, resolve_config, synth_config
from .stats import bonferroni, confusion, mcnemar, rank_features, roc_and_auc, wald_ci
from .synth import generate_corpus
from .validation import compare_protocols, make_folds, run_nested_cv

TABLE1_COLUMNS = ["Model", "Acc", "Std", "95% CI", "AUC", "Sens", "Spec"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _global_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out-dir", default=argparse.SUPPRESS)
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="eegval", parents=[common],
                     description="Leakage-free evaluation of EEG trial classifiers.",
                     epilog="Any config key can be overridden with a dotted flag, "
                            "e.g. --synth.n_samples 128 or --data.source uci.")
    parser.add_argument("--version", action="version", version=f"eegval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("ingest", parents=[common], help="parse, QC and extract a feature CSV")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus as .rd files")
    p.add_argument("--gzip", action="store_true", help="gzip every trial file")

    sub.add_parser("evaluate", parents=[common], help="nested CV report for every model")

    p = sub.add_parser("compare-protocols", parents=[common],
                       help="standard vs nested CV accuracy gap")
    p.add_argument("--models", help="comma-separated model families")
    p.add_argument("--n-seeds", type=int, help="use seeds seed, seed+1, ...")

    p = sub.add_parser("mcnemar", parents=[common], help="pairwise McNemar tests")
    p.add_argument("predictions", nargs="*", help="prediction CSVs written by evaluate")
    p.add_argument("--counts", action="append", default=[], metavar="[NAME=]B:C",
                   help="discordant counts given directly; repeatable")

    p = sub.add_parser("features", parents=[common], help="rank features by class separation")
    p.add_argument("--top", type=int, help="number of top columns to export")
    return parser


def _split_overrides(extra) -> list:
    out = []
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise errors.ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
        else:
            raw = next(it, None)
            if raw is None:
                raise errors.ConfigError(f"override {tok} needs a value")
        out.append((key, parse_value(raw)))
    return out


def _config_from_args(args, extra) -> dict:
    overrides = []
    ns = vars(args)
    if "seed" in ns:
        overrides.append(("seed", ns["seed"]))
    if "out_dir" in ns:
        overrides.append(("out_dir", ns["out_dir"]))
    if "jobs" in ns:
        overrides.append(("jobs", ns["jobs"]))
    overrides += _split_overrides(extra)
    return resolve_config(ns.get("config"), overrides)


def _provenance(cfg: dict, command: str) -> dict:
    return {"tool": "eegval", "version": __version__, "command": command, "config": cfg}


def _dump_json(path: Path, doc):
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _out_dir(cfg) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pct(x):
    return f"{100 * x:.2f}" if math.isfinite(x) else "nan"


# -- commands ---------------------------------------------------------------

def cmd_ingest(cfg: dict, args=None) -> dict:
    out = _out_dir(cfg)
    fm, manifest = load_features(cfg, cfg["seed"])
    fm.to_csv(out / "features.csv")
    _dump_json(out / "manifest.json", {**manifest, "provenance": _provenance(cfg, "ingest")})
    qc = manifest.get("qc", {})
    rejected = {k: v for k, v in qc.items() if not v["accepted"]} if qc else {}
    print(f"ingested {len(fm)} trials, {fm.shape[1]} features; "
          f"{len(rejected)} file(s) rejected by QC")
    for name, v in sorted(rejected.items()):
        print(f"  rejected {name}: {'; '.join(v['reasons'])}")
    return {"features": str(out / "features.csv"), "manifest": str(out / "manifest.json")}


def cmd_synth(cfg: dict, args=None) -> dict:
    out = _out_dir(cfg)
    sc = synth_config(cfg, cfg["seed"])
    ds = generate_corpus(sc)
    trial_dir = out / "trials"
    trial_dir.mkdir(exist_ok=True)
    use_gzip = bool(getattr(args, "gzip", False))
    for t in ds.trials:
        text = serialize_trial(t)
        if use_gzip:
            (trial_dir / f"{t.trial_id}.rd.gz").write_bytes(gzip.compress(text.encode(), mtime=0))
        else:
            (trial_dir / f"{t.trial_id}.rd").write_text(text)
    doc = manifest_dict(ds, None, {"provenance": _provenance(cfg, "synth")})
    _dump_json(out / "synth_manifest.json", doc)
    print(f"wrote {len(ds)} synthetic trials to {trial_dir}")
    return {"trials": str(trial_dir)}


def _table1_row(family, res) -> dict:
    m = res.metrics()
    n = res.labels.size
    lo, hi = wald_ci(res.pooled_accuracy, n)
    roc = roc_and_auc(res.scores, res.labels)
    return {"model": family, "acc": res.accuracy, "std": res.accuracy_std,
            "pooled_acc": res.pooled_accuracy, "ci_low": lo, "ci_high": hi, "n": int(n),
            "auc": roc.auc, "sens": m.sensitivity, "spec": m.specificity,
            "undefined": list(m.undefined)}, roc


def cmd_evaluate(cfg: dict, args=None) -> dict:
    out = _out_dir(cfg)
    seed = int(cfg["seed"])
    fm, manifest = load_features(cfg, seed)
    plan = make_folds(fm.labels, fm.subjects, int(cfg["k_outer"]), bool(cfg["grouped"]),
                      seed, fm.trial_ids)
    rows, details, confusions = [], {}, {}
    for spec in model_specs(cfg):
        res = run_nested_cv(fm, spec, plan, int(cfg["k_inner"]), seed,
                            float(cfg["correlation_threshold"]), int(cfg["jobs"]))
        row, roc = _table1_row(spec.family, res)
        rows.append(row)
        details[spec.family] = res.to_dict(fm)
        confusions[spec.family] = confusion(res.labels, res.predictions).to_dict()
        (out / f"predictions_{spec.family}.csv").write_text(res.predictions_csv(fm))
        (out / f"roc_{spec.family}.csv").write_text(roc.to_csv())
        print(f"{spec.family:>14}: acc {_pct(row['acc'])}%  auc {row['auc']:.3f}")

    lines = [",".join(TABLE1_COLUMNS)]
    for r in rows:
        lines.append(f"{r['model']},{_pct(r['acc'])},{_pct(r['std'])},"
                     f"\"({_pct(r['ci_low'])}, {_pct(r['ci_high'])})\","
                     f"{r['auc']:.3f},{_pct(r['sens'])},{_pct(r['spec'])}")
    (out / "table1.csv").write_text("\n".join(lines) + "\n")
    _dump_json(out / "confusion.json", confusions)
    _dump_json(out / "table1.json", {
        "columns": TABLE1_COLUMNS, "rows": rows, "protocol": "nested",
        "folds": plan.as_mapping(), "models": details, "confusion": confusions,
        "permuted_labels": bool(cfg["permute_labels"]),
        "provenance": _provenance(cfg, "evaluate")})
    return {"rows": rows}


def _seeds(cfg, args):
    if getattr(args, "n_seeds", None):
        return [int(cfg["seed"]) + i for i in range(args.n_seeds)]
    if cfg["seeds"]:
        return [int(s) for s in cfg["seeds"]]
    return [int(cfg["seed"])]


def cmd_compare_protocols(cfg: dict, args=None) -> dict:
    out = _out_dir(cfg)
    families = cfg["models"]
    if getattr(args, "models", None) is not None:
        families = [m for m in args.models.split(",") if m]
    if not families:
        raise errors.ConfigError("compare-protocols needs at least one model")
    specs = model_specs(cfg, families)
    seeds = _seeds(cfg, args)
    per_seed = []
    fm = None
    for s in seeds:
        if fm is None or cfg["data"]["source"] == "synthetic" or cfg["permute_labels"]:
            fm, _ = load_features(cfg, s)
        plan = make_folds(fm.labels, fm.subjects, int(cfg["k_outer"]), bool(cfg["grouped"]),
                          s, fm.trial_ids)
        rep = compare_protocols(fm, specs, plan, int(cfg["k_inner"]), s,
                                float(cfg["correlation_threshold"]), int(cfg["jobs"]))
        for r in rep.rows:
            per_seed.append({"seed": s, "model": r.family, "standard": r.standard_acc,
                             "nested": r.nested_acc, "difference": r.difference})
        print(f"seed {s}: " + ", ".join(f"{r.family} {_pct(r.difference)} pp" for r in rep.rows))

    agg = []
    for fam in families:
        rs = [r for r in per_seed if r["model"] == fam]
        diffs = np.array([r["difference"] for r in rs])
        agg.append({"model": fam,
                    "standard": float(np.mean([r["standard"] for r in rs])),
                    "nested": float(np.mean([r["nested"] for r in rs])),
                    "difference": float(diffs.mean()),
                    "difference_sd": float(diffs.std(ddof=1)) if diffs.size > 1 else 0.0,
                    "n_seeds": len(rs)})

    lines = ["seed,model,standard_cv_pct,nested_cv_pct,difference_pct"]
    lines += [f"{r['seed']},{r['model']},{_pct(r['standard'])},{_pct(r['nested'])},"
              f"{100 * r['difference']:+.2f}" for r in per_seed]
    (out / "table2_per_seed.csv").write_text("\n".join(lines) + "\n")
    lines = ["model,standard_cv_pct,nested_cv_pct,difference_pct,difference_sd_pct,n_seeds"]
    lines += [f"{r['model']},{_pct(r['standard'])},{_pct(r['nested'])},"
              f"{100 * r['difference']:+.2f},{_pct(r['difference_sd'])},{r['n_seeds']}"
              for r in agg]
    (out / "table2.csv").write_text("\n".join(lines) + "\n")
    _dump_json(out / "table2.json", {"seeds": seeds, "per_seed": per_seed, "aggregate": agg,
                                     "provenance": _provenance(cfg, "compare-protocols")})
    return {"per_seed": per_seed, "aggregate": agg}


def _read_predictions(path: Path) -> dict:
    lines = path.read_text().splitlines()
    if not lines:
        raise errors.DataError(f"{path}: empty predictions file")
    header = lines[0].split(",")
    try:
        i_id, i_lab, i_pred = (header.index(c) for c in ("trial_id", "label", "prediction"))
    except ValueError as exc:
        raise errors.DataError(f"{path}: missing column ({exc})") from exc
    rows = {}
    for ln in lines[1:]:
        if not ln.strip():
            continue
        parts = ln.split(",")
        rows[parts[i_id]] = (int(parts[i_lab]), int(parts[i_pred]))
    return rows


def _model_name(path: Path) -> str:
    stem = path.name.split(".")[0]
    return stem[len("predictions_"):] if stem.startswith("predictions_") else stem


def _parse_counts(spec: str, index: int):
    name, _, bc = spec.rpartition("=")
    try:
        b, c = (int(v) for v in bc.split(":"))
    except ValueError as exc:
        raise errors.ConfigError(f"--counts expects [NAME=]B:C, got {spec!r}") from exc
    return (name or f"pair{index + 1}"), b, c


def mcnemar_row(name_a, name_b, b, c, alpha=0.05) -> dict:
    row = {"model_a": name_a, "model_b": name_b, "b": b, "c": c}
    try:
        r = mcnemar(b, c)
    except errors.NoDiscordantPairs:
        return {**row, "chi2": None, "p_value": None, "significant": False, "note": "—"}
    return {**row, "chi2": r.chi2, "p_value": r.p_value, "significant": r.p_value < alpha,
            "note": "*" if r.p_value < alpha else ""}


def cmd_mcnemar(cfg: dict, args=None) -> dict:
    out = _out_dir(cfg)
    alpha = float(cfg["alpha"])
    paths = [Path(p) for p in (getattr(args, "predictions", None) or [])]
    counts = getattr(args, "counts", None) or []
    if not paths and not counts:
        raise errors.ConfigError("mcnemar needs prediction files or --counts")
    rows = []
    if paths:
        tables = {}
        for p in paths:
            name = _model_name(p)
            while name in tables:
                name += "'"
            tables[name] = _read_predictions(p)
        names = list(tables)
        ids = set(tables[names[0]])
        for n in names[1:]:
            if set(tables[n]) != ids:
                raise errors.DataError(f"trial sets of {names[0]} and {n} differ")
        order = sorted(ids)
        for a, b in itertools.combinations(names, 2):
            ta, tb = tables[a], tables[b]
            if any(ta[t][0] != tb[t][0] for t in order):
                raise errors.DataError(f"labels of {a} and {b} disagree")
            ra = np.array([ta[t][1] == ta[t][0] for t in order])
            rb = np.array([tb[t][1] == tb[t][0] for t in order])
            rows.append(mcnemar_row(a, b, int(np.sum(ra & ~rb)), int(np.sum(~ra & rb)), alpha))
    for i, s in enumerate(counts):
        name, b, c = _parse_counts(s, i)
        a, _, bname = name.partition(" vs ")
        rows.append(mcnemar_row(a, bname, b, c, alpha))

    lines = ["model_a,model_b,b,c,chi2,p_value,significant"]
    for r in rows:
        chi = "—" if r["chi2"] is None else f"{r['chi2']:.2f}"
        p = "—" if r["p_value"] is None else f"{r['p_value']:.3g}"
        lines.append(f"{r['model_a']},{r['model_b']},{r['b']},{r['c']},{chi},{p},{r['note']}")
    (out / "table3.csv").write_text("\n".join(lines) + "\n")
    _dump_json(out / "table3.json", {"alpha": alpha, "rows": rows,
                                     "provenance": _provenance(cfg, "mcnemar")})
    for ln in lines[1:]:
        print(ln)
    return {"rows": rows}


def cmd_features(cfg: dict, args=None) -> dict:
    out = _out_dir(cfg)
    fm, _ = load_features(cfg, cfg["seed"])
    names = list(fm.names)
    X = fm.values
    if cfg["rank_after_selection"]:
        mask = fit_selector(X, float(cfg["correlation_threshold"]))
        X = apply_selector(mask, X)
        names = [names[i] for i in mask.kept_indices]
    m = int(cfg["bonferroni_m"] or len(names))
    alpha = float(cfg["alpha"])
    ranked = rank_features(X, names, fm.labels, alpha, m)

    lines = ["rank,feature,p_value,cohens_d,effect_size,significant_after_bonferroni"]
    for i, s in enumerate(ranked, 1):
        lines.append(f"{i},{s.name},{s.p_value:.3g},{s.cohens_d:.3f},{s.effect_label},"
                     f"{str(s.significant_after_bonferroni).lower()}")
    (out / "table5.csv").write_text("\n".join(lines) + "\n")

    top = int(getattr(args, "top", None) or cfg["top_k"])
    top_names = [s.name for s in ranked[:top]]
    cols = [X[:, names.index(n)] for n in top_names]
    head = [f"feat{i + 1}" for i in range(len(top_names))] + ["label"]
    body = [",".join([repr(float(c[r])) for c in cols] + [str(int(fm.labels[r]))])
            for r in range(len(fm))]
    (out / "top_features.csv").write_text("\n".join([",".join(head)] + body) + "\n")

    _dump_json(out / "table5.json", {
        "test": "welch_t", "alpha": alpha, "bonferroni_m": m,
        "bonferroni_threshold": bonferroni(alpha, m),
        "n_features_ranked": len(names), "top_features": top_names,
        "rows": [dict(rank=i, **s.to_dict()) for i, s in enumerate(ranked, 1)],
        "provenance": _provenance(cfg, "features")})
    for ln in lines[1:6]:
        print(ln)
    return {"ranked": ranked}


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "evaluate": cmd_evaluate,
    "compare-protocols": cmd_compare_protocols,
    "mcnemar": cmd_mcnemar,
    "features": cmd_features,
}


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = _config_from_args(args, extra)
        COMMANDS[args.command](cfg, args)
    except errors.EegValError as exc:
        print(f"eegval {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
