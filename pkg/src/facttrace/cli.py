"""Command-line pipeline: index, evaluate, classify, and report.

Subcommands compose the library modules over files. A JSON config file
supplies defaults; any flag given on the command line wins. Every artifact
is written atomically and is a deterministic function of (inputs, config,
seed), so re-running a command over unchanged inputs reproduces identical
bytes.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig
from .corpus import count_cooccurrences, queries_from_factset
from .correlation import bin_curve, pearson_log_recall
from .coverage import load_token_profiles, pair_coverage, select_language_specific_tokens
from .errors import ConfigError, DegenerateInput, FactTraceError, MissingArtifact
from .evaluation import (
    accuracy,
    build_correctness,
    consistency,
    consistency_matrix,
    group_consistency_series,
    identical_object_recall,
    load_predictions,
    per_relation_metrics,
    subset_accuracy_series,
)
from .facts import exclude_identical, identical_object_flags, load_facts, relation_histogram
from .fileio import atomic_write_text, write_csv, write_json
from .similarity import load_manifest, similarity_trajectories
from .threshold import (
    LabeledFrequency,
    bootstrap,
    load_labeled_csv,
    optimal_threshold,
    sensitivity_sweep,
    set_overlap,
)


def _expand_shards(pattern: str) -> list[str]:
    shards = sorted(glob.glob(pattern))
    if not shards:
        raise ConfigError(f"no corpus shards match glob {pattern!r}")
    return shards


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _script_groups(langs) -> dict[str, list[str]]:
    """Language groups by script suffix of the code, plus 'all'."""
    by_script: dict[str, list[str]] = {}
    for lang in langs:
        script = lang.rsplit("_", 1)[-1] if "_" in lang else lang
        by_script.setdefault(script, []).append(lang)
    groups = {script: members for script, members in by_script.items() if len(members) >= 2}
    if len(langs) >= 2:
        groups["all"] = list(langs)
    return groups


def _read_frequency_csv(out: Path, lang: str) -> dict[int, int]:
    path = out / f"frequency_{lang}.csv"
    if not path.is_file():
        raise MissingArtifact(f"missing frequency table {path}; run the index command first")
    freq: dict[int, int] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["lang"] != lang:
                continue
            freq[int(row["fact_id"])] = int(row["frequency"])
    return freq


def _labeled_from_pipeline(cfg: RunConfig, out: Path, ms, cm, step: int):
    """Per-language labeled points joining indexed frequencies with
    correctness at one checkpoint; restricted to each language's kept ids."""
    labeled: dict[str, list[LabeledFrequency]] = {}
    for lang in ms.languages:
        freq = _read_frequency_csv(out, lang)
        correct = cm.correct_ids(lang, step)
        rows = []
        for fid in ms.fact_ids(lang):
            if fid not in freq:
                raise MissingArtifact(f"frequency table for {lang} lacks fact_id {fid}")
            rows.append(LabeledFrequency(fact_id=fid, freq=freq[fid], correct=fid in correct))
        labeled[lang] = rows
    return labeled


def _labeled_from_dir(labeled_dir: str) -> dict[str, list[LabeledFrequency]]:
    paths = sorted(Path(labeled_dir).glob("*.csv"))
    if not paths:
        raise ConfigError(f"no labeled CSV files under {labeled_dir}")
    return {path.stem: load_labeled_csv(path) for path in paths}


def _classifier_json(lang: str, n: int, result) -> dict:
    payload = {"lang": lang, "n": n}
    payload.update(result.to_dict())
    return payload


def cmd_facts(cfg: RunConfig) -> None:
    cfg.validate(required=("facts_dir", "output_dir"))
    out = _out_dir(cfg)
    ms = load_facts(cfg.facts_dir)
    summary = {
        "languages": list(ms.languages),
        "count_per_language": {lang: ms.size(lang) for lang in ms.languages},
        "relations": relation_histogram(ms),
    }
    write_json(out / "facts_summary.json", summary)
    _, report = exclude_identical(ms)
    report.write(out / "exclusion_report.json")


def cmd_index(cfg: RunConfig) -> None:
    cfg.validate(required=("facts_dir", "corpus_shards", "output_dir"))
    out = _out_dir(cfg)
    shards = _expand_shards(cfg.corpus_shards)
    ms = load_facts(cfg.facts_dir)
    table = count_cooccurrences(shards, queries_from_factset(ms), jobs=cfg.jobs)
    for lang in ms.languages:
        atomic_write_text(out / f"frequency_{lang}.csv", table.to_csv_text(lang))
    write_json(out / "frequency_meta.json", table.metadata())


def cmd_eval(cfg: RunConfig) -> None:
    cfg.validate(required=("facts_dir", "predictions", "steps", "output_dir"))
    out = _out_dir(cfg)
    ms = load_facts(cfg.facts_dir)
    records = load_predictions(cfg.predictions)
    cm = build_correctness(records, ms, list(cfg.steps), on_missing=cfg.on_missing)

    rows = []
    for lang in ms.languages:
        for step in cfg.steps:
            acc = accuracy(cm, lang, step)
            co = consistency(cm, lang, cfg.ref_lang, step)
            rows.append((lang, step, acc, co))
    write_csv(out / "acc_co.csv", ("lang", "step", "acc", "co_ref"), rows)

    for step in cfg.steps:
        write_json(out / f"consistency_matrix_{step}.json", consistency_matrix(cm, step).to_dict())

    metrics = per_relation_metrics(cm, ms, cfg.ref_lang, list(cfg.steps))
    rel_rows = [
        (lang, rel, step, acc, co)
        for (lang, rel, step), (acc, co) in sorted(metrics.items())
    ]
    write_csv(out / "per_relation.csv", ("lang", "relation", "step", "acc", "co_ref"), rel_rows)

    groups = _script_groups(ms.languages)
    group_rows = []
    if groups:
        series = group_consistency_series(cm, groups, list(cfg.steps))
        for name in sorted(series):
            for step, value in zip(cfg.steps, series[name]):
                group_rows.append((name, step, value))
    write_csv(out / "group_co.csv", ("group", "step", "mean_co"), group_rows)

    flags = identical_object_flags(ms, cfg.ref_lang)
    recall = identical_object_recall(cm, ms, flags, cfg.ref_lang, cfg.steps[-1])
    recall_rows = [
        (lang, rel, recalled, eligible)
        for (lang, rel), (recalled, eligible) in sorted(recall.items())
    ]
    write_csv(
        out / "identical_object_recall.csv",
        ("lang", "relation", "recalled", "eligible"),
        recall_rows,
    )
    write_json(out / "eval_meta.json", {"missing_as_incorrect": cm.missing_as_incorrect})


def _load_labeled(cfg: RunConfig, out: Path):
    """Either read precomputed labeled CSVs or compose them from the
    indexed frequencies and the final-step correctness."""
    if cfg.labeled_dir:
        if cfg.exclude_identical:
            raise ConfigError("--exclude-identical needs a facts directory, not --labeled-dir")
        return _labeled_from_dir(cfg.labeled_dir), None, None
    cfg.validate(required=("facts_dir", "predictions", "steps"))
    ms = load_facts(cfg.facts_dir)
    records = load_predictions(cfg.predictions)
    cm = build_correctness(records, ms, list(cfg.steps), on_missing=cfg.on_missing)
    return _labeled_from_pipeline(cfg, out, ms, cm, cfg.steps[-1]), ms, cm


def cmd_classify(cfg: RunConfig) -> None:
    cfg.validate(required=("output_dir",))
    out = _out_dir(cfg)
    labeled, ms, cm = _load_labeled(cfg, out)

    results = {}
    for lang in sorted(labeled):
        result = optimal_threshold(labeled[lang])
        results[lang] = result
        write_json(out / f"classifier_{lang}.json", _classifier_json(lang, len(labeled[lang]), result))

    if ms is not None:
        relation_of = {f.fact_id: f.relation for f in ms.facts[ms.languages[0]]}
        rel_rows = []
        series_rows = []
        for lang in sorted(results):
            result = results[lang]
            for fid in result.sclfp_ids:
                rel_rows.append((lang, relation_of[fid]))
            if result.sclfp_ids:
                series = subset_accuracy_series(cm, result.sclfp_ids, lang, list(cfg.steps))
                for step, acc in zip(cfg.steps, series):
                    series_rows.append((lang, step, acc))
        hist_rows = []
        for lang in sorted(results):
            by_rel: dict[str, int] = {}
            for row_lang, rel in rel_rows:
                if row_lang == lang:
                    by_rel[rel] = by_rel.get(rel, 0) + 1
            for rel in sorted(by_rel):
                hist_rows.append((lang, rel, by_rel[rel]))
        write_csv(out / "sclfp_relations.csv", ("lang", "relation", "count"), hist_rows)
        write_csv(out / "sclfp_series.csv", ("lang", "step", "acc"), series_rows)

    if cfg.exclude_identical:
        _, report = exclude_identical(ms)
        overlap = {}
        for lang in ms.languages:
            kept = set(report.kept[lang])
            reduced_points = [d for d in labeled[lang] if d.fact_id in kept]
            result_ex = optimal_threshold(reduced_points)
            write_json(
                out / f"classifier_excluded_{lang}.json",
                _classifier_json(lang, len(reduced_points), result_ex),
            )
            jaccard, containment = set_overlap(results[lang].sclfp_ids, result_ex.sclfp_ids)
            overlap[lang] = {"jaccard": jaccard, "containment_in_full": containment}
        write_json(out / "sclfp_overlap.json", overlap)


def cmd_sweep(cfg: RunConfig) -> None:
    cfg.validate(required=("output_dir",))
    out = _out_dir(cfg)
    labeled, _, _ = _load_labeled(cfg, out)
    for lang in sorted(labeled):
        result = optimal_threshold(labeled[lang])
        points = sensitivity_sweep(labeled[lang], result.threshold)
        write_csv(out / f"sweep_{lang}.csv", ("threshold", "accuracy"), points)


def cmd_bootstrap(cfg: RunConfig) -> None:
    cfg.validate(required=("output_dir",))
    out = _out_dir(cfg)
    labeled, _, _ = _load_labeled(cfg, out)
    for lang in sorted(labeled):
        summary = bootstrap(
            labeled[lang],
            runs=cfg.bootstrap_runs,
            sample_fraction=cfg.bootstrap_fraction,
            seed=cfg.seed,
        )
        payload = {"lang": lang}
        payload.update(summary.to_dict())
        write_json(out / f"bootstrap_{lang}.json", payload)


def _write_correlation(out: Path, name: str, data, bins: int) -> None:
    curve = bin_curve(data, bins=bins)
    write_csv(
        out / f"correlation_{name}.csv",
        ("bin_lo", "bin_hi", "count", "p_correct"),
        curve.to_rows(),
    )
    payload = {
        "bins": bins,
        "zero_bucket": {"count": curve.zero_count, "p_correct": curve.zero_p_correct},
    }
    try:
        r, p_value = pearson_log_recall(curve)
        payload.update({"r": r, "p_value": p_value})
    except DegenerateInput as exc:
        payload.update({"r": None, "p_value": None, "degenerate": str(exc)})
    write_json(out / f"correlation_{name}.json", payload)


def cmd_correlate(cfg: RunConfig) -> None:
    cfg.validate(required=("output_dir",))
    out = _out_dir(cfg)
    labeled, _, _ = _load_labeled(cfg, out)
    pooled = []
    for lang in sorted(labeled):
        _write_correlation(out, lang, labeled[lang], cfg.bins)
        pooled.extend(labeled[lang])
    _write_correlation(out, "global", pooled, cfg.bins)


def cmd_similarity(cfg: RunConfig) -> None:
    cfg.validate(required=("facts_dir", "embeddings_dir", "steps", "output_dir"))
    out = _out_dir(cfg)
    ms = load_facts(cfg.facts_dir)
    emb_dir = Path(cfg.embeddings_dir)
    flags = identical_object_flags(ms, cfg.ref_lang)

    ref_manifests = {}
    for step in cfg.steps:
        sidecar = emb_dir / f"{cfg.ref_lang}_{step}.json"
        if not sidecar.is_file():
            raise MissingArtifact(f"missing reference embedding manifest {sidecar}")
        ref_manifests[step] = load_manifest(sidecar)

    for lang in ms.languages:
        if lang == cfg.ref_lang:
            continue
        sidecars = {step: emb_dir / f"{lang}_{step}.json" for step in cfg.steps}
        present = [step for step, p in sidecars.items() if p.is_file()]
        if not present:
            continue
        if len(present) != len(cfg.steps):
            missing = next(p for step, p in sidecars.items() if step not in present)
            raise MissingArtifact(f"missing embedding manifest {missing}")
        manifests = {step: load_manifest(sidecars[step]) for step in cfg.steps}

        clf_path = out / f"classifier_{lang}.json"
        if not clf_path.is_file():
            raise MissingArtifact(f"missing classifier output {clf_path}; run classify first")
        clf = json.loads(clf_path.read_text(encoding="utf-8"))

        series = similarity_trajectories(
            manifests,
            ref_manifests,
            sclfp_ids=clf["sclfp_ids"],
            uwlfp_ids=clf["uwlfp_ids"],
            all_ids=ms.fact_ids(lang),
            identical_object_flags=flags[lang],
        )
        rows = []
        for name in ("SCLFP", "UWLFP", "all"):
            rows.extend(series[name].to_rows())
        write_csv(
            out / f"similarity_{lang}.csv",
            ("group", "step", "mean_sim", "pairs", "skipped"),
            rows,
        )


def cmd_coverage(cfg: RunConfig) -> None:
    cfg.validate(required=("token_profiles", "corpus_shards", "output_dir"))
    out = _out_dir(cfg)
    profiles = load_token_profiles(cfg.token_profiles)
    selected = select_language_specific_tokens(profiles, k=cfg.top_tokens, dominance=cfg.dominance)
    shards = _expand_shards(cfg.corpus_shards)
    cov = pair_coverage(selected, shards, jobs=cfg.jobs)
    rows = []
    for lang in sorted(cov.pairs):
        for tok_a, tok_b, count in cov.pairs[lang]:
            rows.append((lang, tok_a, tok_b, count))
    write_csv(out / "coverage_pairs.csv", ("lang", "token_a", "token_b", "doc_count"), rows)
    write_json(out / "coverage_stats.json", cov.box_stats())


def _coerce(value: str):
    if value == "":
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _read_csv_rows(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [{k: _coerce(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def cmd_report(cfg: RunConfig) -> None:
    cfg.validate(required=("output_dir",))
    out = _out_dir(cfg)

    def require(name: str) -> Path:
        path = out / name
        if not path.is_file():
            raise MissingArtifact(f"missing artifact {path}")
        return path

    artifacts: dict = {
        "frequency_meta": _read_json(require("frequency_meta.json")),
        "accuracy_consistency": _read_csv_rows(require("acc_co.csv")),
    }

    classifier_paths = sorted(out.glob("classifier_*.json"))
    classifier_paths = [p for p in classifier_paths if not p.name.startswith("classifier_excluded_")]
    if not classifier_paths:
        raise MissingArtifact(f"missing artifact {out / 'classifier_<lang>.json'}")
    artifacts["classifier"] = {}
    for path in classifier_paths:
        payload = _read_json(path)
        artifacts["classifier"][payload["lang"]] = payload

    similarity_paths = sorted(out.glob("similarity_*.csv"))
    if not similarity_paths:
        raise MissingArtifact(f"missing artifact {out / 'similarity_<lang>.csv'}")
    artifacts["similarity"] = {
        p.stem.removeprefix("similarity_"): _read_csv_rows(p) for p in similarity_paths
    }

    for step_path in sorted(out.glob("consistency_matrix_*.json")):
        artifacts.setdefault("consistency_matrices", {})[
            step_path.stem.removeprefix("consistency_matrix_")
        ] = _read_json(step_path)

    optional_csv = {
        "per_relation": "per_relation.csv",
        "group_consistency": "group_co.csv",
        "identical_object_recall": "identical_object_recall.csv",
        "sclfp_relations": "sclfp_relations.csv",
        "sclfp_series": "sclfp_series.csv",
        "coverage_pairs": "coverage_pairs.csv",
    }
    for key, name in optional_csv.items():
        path = out / name
        if path.is_file():
            artifacts[key] = _read_csv_rows(path)

    optional_json = {
        "facts_summary": "facts_summary.json",
        "exclusion_report": "exclusion_report.json",
        "eval_meta": "eval_meta.json",
        "sclfp_overlap": "sclfp_overlap.json",
        "coverage_stats": "coverage_stats.json",
    }
    for key, name in optional_json.items():
        path = out / name
        if path.is_file():
            artifacts[key] = _read_json(path)

    for prefix, key in (
        ("classifier_excluded_", "classifier_excluded"),
        ("bootstrap_", "bootstrap"),
    ):
        for path in sorted(out.glob(f"{prefix}*.json")):
            artifacts.setdefault(key, {})[path.stem.removeprefix(prefix)] = _read_json(path)

    for path in sorted(out.glob("sweep_*.csv")):
        artifacts.setdefault("sweep", {})[path.stem.removeprefix("sweep_")] = _read_csv_rows(path)
    for path in sorted(out.glob("correlation_*.json")):
        artifacts.setdefault("correlation", {})[
            path.stem.removeprefix("correlation_")
        ] = _read_json(path)

    report = {
        "tool": {"name": "facttrace", "version": __version__},
        "config": cfg.to_dict(),
        "artifacts": artifacts,
    }
    write_json(out / "report.json", report)


def validate_report(report: dict) -> None:
    """Structural check of a consolidated report; raises on violations."""
    for key in ("tool", "config", "artifacts"):
        if key not in report:
            raise MissingArtifact(f"report lacks top-level key {key!r}")
    tool = report["tool"]
    if tool.get("name") != "facttrace" or "version" not in tool:
        raise MissingArtifact("report tool stanza malformed")
    artifacts = report["artifacts"]
    for key in ("frequency_meta", "accuracy_consistency", "classifier", "similarity"):
        if key not in artifacts:
            raise MissingArtifact(f"report lacks artifact {key!r}")
    if not isinstance(artifacts["accuracy_consistency"], list):
        raise MissingArtifact("accuracy_consistency must be a row list")
    for lang, clf in artifacts["classifier"].items():
        for field in ("threshold", "accuracy", "tp", "fp", "tn", "fn", "sclfp_ids", "uwlfp_ids"):
            if field not in clf:
                raise MissingArtifact(f"classifier entry {lang} lacks {field!r}")


_COMMANDS = {
    "facts": cmd_facts,
    "index": cmd_index,
    "eval": cmd_eval,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "bootstrap": cmd_bootstrap,
    "correlate": cmd_correlate,
    "similarity": cmd_similarity,
    "coverage": cmd_coverage,
    "report": cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facttrace",
        description="Trace multilingual factual recall across pretraining checkpoints.",
    )
    parser.add_argument("--version", action="version", version=f"facttrace {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--facts-dir")
        p.add_argument("--output-dir")
        p.add_argument("--shards", dest="corpus_shards", help="glob of corpus shard files")
        p.add_argument("--predictions")
        p.add_argument("--embeddings-dir")
        p.add_argument("--token-profiles")
        p.add_argument("--labeled-dir", help="directory of per-language fact_id,freq,correct CSVs")
        p.add_argument("--ref-lang")
        p.add_argument("--steps", nargs="+", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--bootstrap-runs", type=int)
        p.add_argument("--bootstrap-fraction", type=float)
        p.add_argument("--bins", type=int)
        p.add_argument("--dominance", type=float)
        p.add_argument("--top-tokens", type=int)
        p.add_argument("--exclude-identical", action="store_true", default=None)
        p.add_argument("--on-missing", choices=("error", "incorrect"))
        p.add_argument("--jobs", type=int)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(
            facts_dir=args.facts_dir,
            output_dir=args.output_dir,
            corpus_shards=args.corpus_shards,
            predictions=args.predictions,
            embeddings_dir=args.embeddings_dir,
            token_profiles=args.token_profiles,
            labeled_dir=args.labeled_dir,
            ref_lang=args.ref_lang,
            steps=args.steps,
            seed=args.seed,
            bootstrap_runs=args.bootstrap_runs,
            bootstrap_fraction=args.bootstrap_fraction,
            bins=args.bins,
            dominance=args.dominance,
            top_tokens=args.top_tokens,
            exclude_identical=args.exclude_identical,
            on_missing=args.on_missing,
            jobs=args.jobs,
        )
        _COMMANDS[args.command](cfg)
    except FactTraceError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
