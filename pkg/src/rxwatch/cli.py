"""Command-line pipeline: composable subcommands over a shared config.

Each subcommand reads its upstream artifacts from the output directory,
writes its own artifacts plus a manifest (inputs, config hash, seed), and
prints a short human summary.  Exit codes: 0 success, 1 usage/config
error, 2 data error, 3 missing dependency or annotation gate.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, btm, classifier, corpus, features, screening
from .config import PipelineConfig, canonical_dump, config_hash, load_config
from .errors import (
    ConfigError,
    CoverageError,
    DependencyGateError,
    SchemaError,
    UndefinedTestError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEPENDENCY = 3

ALL_DRUGS_KEY = "all"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit(2)
        raise UsageError(message)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    config: PipelineConfig,
    subcommand: str,
    inputs: list[Path],
    outputs: list[Path],
    seed: int | None,
) -> None:
    out_dir = Path(config.output_dir) / "manifests"
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "subcommand": subcommand,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "config_hash": config_hash(config),
        "config": canonical_dump(config).splitlines(),
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
    }
    (out_dir / f"{subcommand}.manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), "utf-8"
    )


def _artifact(config: PipelineConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _require_artifact(config: PipelineConfig, name: str, produced_by: str) -> Path:
    path = _artifact(config, name)
    if not path.exists():
        raise DependencyGateError(
            f"missing artifact {path}; run the '{produced_by}' subcommand first",
            required=produced_by,
        )
    return path


def cmd_ingest(config: PipelineConfig) -> int:
    if not config.raw_paths:
        raise ConfigError(["input.raw: no input files configured"])
    records: list[corpus.TweetRecord] = []
    seen: set[str] = set()
    for raw in config.raw_paths:  # files processed in argument order
        for record in corpus.ingest_jsonl(raw, schema_mode=config.schema_mode):
            if record.tweet_id not in seen:
                seen.add(record.tweet_id)
                records.append(record)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = _artifact(config, "corpus.jsonl")
    corpus.serialize_jsonl(records, out)
    _write_manifest(config, "ingest", [Path(p) for p in config.raw_paths], [out], None)
    print(f"ingested {len(records)} records -> {out}")
    return EXIT_OK


def cmd_filter(config: PipelineConfig) -> int:
    source = _require_artifact(config, "corpus.jsonl", "ingest")
    records = corpus.ingest_jsonl(source, schema_mode="lenient")
    keywords = corpus.KeywordSet(frozenset(config.drugs))
    kept = corpus.keyword_filter(records, keywords, match_mode=config.match_mode)
    out = _artifact(config, "filtered.jsonl")
    corpus.serialize_jsonl(kept, out)

    volume = {drug: 0 for drug in sorted(config.drugs)}
    for record in kept:
        for drug in record.matched_keywords:
            volume[drug] += 1
    dropped = len(records) - len(kept)
    volume_path = _artifact(config, "volume.csv")
    with open(volume_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["keyword", "tweets"])
        for drug, count in volume.items():
            writer.writerow([drug, count])
        writer.writerow(["dropped", dropped])
    _write_manifest(config, "filter", [source], [out, volume_path], None)
    summary = ", ".join(f"{drug}: {count}" for drug, count in volume.items())
    print(f"kept {len(kept)} of {len(records)} records ({summary}, dropped: {dropped})")
    return EXIT_OK


def _load_filtered(config: PipelineConfig) -> list[corpus.TweetRecord]:
    source = _require_artifact(config, "filtered.jsonl", "filter")
    return corpus.ingest_jsonl(source, schema_mode="lenient")


def cmd_topics(config: PipelineConfig) -> int:
    source = _require_artifact(config, "filtered.jsonl", "filter")
    records = corpus.ingest_jsonl(source, schema_mode="lenient")
    stopwords = corpus.load_stopwords(config.stopwords_path)
    docs, vocabulary = corpus.tokenize_corpus(records, stopwords)
    stats = corpus.build_doc_term(docs, vocabulary)
    k = config.k if config.k is not None else btm.choose_k(stats, cap=config.topic_cap)
    per_doc, aggregate = btm.extract_biterms(docs, window=config.window)
    model = btm.fit(
        aggregate,
        k=k,
        vocab_size=len(vocabulary),
        alpha=config.alpha,
        beta=config.beta,
        iterations=config.iterations,
        seed=config.btm_seed,
        vocabulary=vocabulary,
    )
    model_path = _artifact(config, "btm_model.json")
    btm.save_model(model, model_path)
    summary_path = _artifact(config, "topic_summary.txt")
    summary_path.write_text(btm.topic_summary(model), "utf-8")

    dists = btm.infer_corpus(model, docs, per_doc)
    dist_path = _artifact(config, "doc_topics.csv")
    write_doc_topics(dists, k, dist_path)
    _write_manifest(
        config, "topics", [source], [model_path, summary_path, dist_path], config.btm_seed
    )
    print(
        f"fitted {k} topics on {len(aggregate)} biterms over {len(vocabulary)} terms "
        f"(sparsity {stats.sparsity:.4f}) -> {model_path}"
    )
    return EXIT_OK


def write_doc_topics(dists: list[btm.DocTopicDist], k: int, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tweet_id", "degenerate", "dominant_topic", *[f"p{i}" for i in range(k)]])
        for dist in dists:
            writer.writerow(
                [
                    dist.tweet_id,
                    int(dist.degenerate),
                    dist.dominant_topic,
                    *[repr(p) for p in dist.proportions],
                ]
            )


def read_doc_topics(path: Path) -> list[btm.DocTopicDist]:
    dists = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        k = len(header) - 3
        for row in reader:
            dists.append(
                btm.DocTopicDist(
                    tweet_id=row[0],
                    proportions=tuple(float(v) for v in row[3 : 3 + k]),
                    dominant_topic=int(row[2]),
                    degenerate=bool(int(row[1])),
                )
            )
    return dists


def _rogue_topic_set(config: PipelineConfig, k: int) -> set[int]:
    """Rogue topics from config override or from the annotation store."""
    if config.rogue_topics is not None:
        return set(config.rogue_topics)
    store_path = Path(config.store_path)
    if not store_path.exists():
        raise DependencyGateError(
            f"annotation store {store_path} not found; annotate topics via 'serve' "
            "or set isolation.rogue_topics",
            required="serve",
        )
    store = screening.AnnotationStore(store_path)
    annotations = store.topic_annotations()
    try:
        return screening.relevant_topics(annotations, k)
    except CoverageError as exc:
        raise DependencyGateError(
            f"topic annotation pass incomplete ({exc}); finish annotating via 'serve'",
            required="serve",
        ) from exc


def cmd_isolate(config: PipelineConfig) -> int:
    dist_path = _require_artifact(config, "doc_topics.csv", "topics")
    dists = read_doc_topics(dist_path)
    k = len(dists[0].proportions) if dists else 0
    rogue_topics = _rogue_topic_set(config, k)
    out = _artifact(config, "isolated.csv")
    if not rogue_topics:
        isolated: list[str] = []
    else:
        isolated = screening.isolate_rogue(dists, rogue_topics)
    dominant = {d.tweet_id: d.dominant_topic for d in dists}
    with open(out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tweet_id", "dominant_topic"])
        for tweet_id in isolated:
            writer.writerow([tweet_id, dominant[tweet_id]])
    inputs = [dist_path]
    if config.rogue_topics is None:
        inputs.append(Path(config.store_path))
    _write_manifest(config, "isolate", inputs, [out], None)
    print(f"isolated {len(isolated)} rogue-candidate tweets under topics {sorted(rogue_topics)}")
    return EXIT_OK


def cmd_features(config: PipelineConfig) -> int:
    records = _load_filtered(config)
    dist_path = _require_artifact(config, "doc_topics.csv", "topics")
    dists = read_doc_topics(dist_path)
    k = len(dists[0].proportions) if dists else 0
    rogue_topics = _rogue_topic_set(config, k)
    store_path = Path(config.store_path)
    if not store_path.exists():
        raise DependencyGateError(
            f"annotation store {store_path} not found; tweet labels require both "
            "annotation passes (run 'serve')",
            required="serve",
        )
    store = screening.AnnotationStore(store_path)
    tweet_annotations = store.tweet_annotations()

    # second annotation gate: every isolated candidate needs a human label
    isolated = screening.isolate_rogue(dists, rogue_topics) if rogue_topics else []
    annotated_ids = {a.tweet_id for a in tweet_annotations}
    missing = [tweet_id for tweet_id in isolated if tweet_id not in annotated_ids]
    if missing:
        raise DependencyGateError(
            f"tweet annotation pass incomplete: {len(missing)} isolated candidates "
            f"unannotated (e.g. {', '.join(missing[:3])}); finish annotating via 'serve'",
            required="serve",
        )
    labeled = screening.label_dataset_with_topics(records, dists, rogue_topics, tweet_annotations)
    label_by_tweet = dict(labeled)
    vectors = [
        features.extract_features(record, label=label_by_tweet[record.tweet_id])
        for record in records
    ]
    drugs_by_tweet = {r.tweet_id: ";".join(sorted(r.matched_keywords)) for r in records}
    out = _artifact(config, "features.csv")
    features.export_features_csv(vectors, out, drugs_by_tweet)
    labels_path = _artifact(config, "labels.csv")
    screening.export_labels_csv(labeled, labels_path)
    rogue_count = sum(1 for _, label in labeled if label is screening.ClassLabel.ROGUE)
    _write_manifest(
        config,
        "features",
        [_artifact(config, "filtered.jsonl"), dist_path, store_path],
        [out, labels_path],
        None,
    )
    print(f"extracted {len(vectors)} feature vectors ({rogue_count} rogue) -> {out}")
    return EXIT_OK


def _group_by_drug(
    vectors: list[features.FeatureVector], drugs_by_tweet: dict[str, str]
) -> dict[str, list[features.FeatureVector]]:
    groups: dict[str, list[features.FeatureVector]] = {ALL_DRUGS_KEY: list(vectors)}
    for vector in vectors:
        for drug in filter(None, drugs_by_tweet.get(vector.tweet_id, "").split(";")):
            groups.setdefault(drug, []).append(vector)
    return groups


def _two_class(vectors: list[features.FeatureVector]) -> bool:
    labels = {v.label for v in vectors}
    return screening.ClassLabel.ROGUE in labels and screening.ClassLabel.NONROGUE in labels


def cmd_stats(config: PipelineConfig) -> int:
    feature_path = _require_artifact(config, "features.csv", "features")
    vectors, drugs_by_tweet = features.read_features_csv(feature_path)
    records = _load_filtered(config)
    record_by_id = {r.tweet_id: r for r in records}
    rogue_ids = {v.tweet_id for v in vectors if v.label is screening.ClassLabel.ROGUE}

    stats_rows: list[list[str]] = []
    report_blocks: list[str] = []
    age_rows: list[list[str]] = []
    for drug, group in sorted(_group_by_drug(vectors, drugs_by_tweet).items()):
        if not _two_class(group):
            print(f"skipping {drug}: needs both classes", file=sys.stderr)
            continue
        summaries = features.group_means(group, drug)
        tests: dict[str, features.TTestResult] = {}
        for summary in summaries:
            rogue_vals = [getattr(v, summary.feature) for v in group if v.label is screening.ClassLabel.ROGUE]
            nonrogue_vals = [
                getattr(v, summary.feature) for v in group if v.label is screening.ClassLabel.NONROGUE
            ]
            try:
                tests[summary.feature] = features.welch_ttest(
                    rogue_vals, nonrogue_vals, feature=summary.feature
                )
            except UndefinedTestError:
                pass  # constant-in-both-classes features are reported as n/a
            ratio = features.crossgroup_ratio(summary)
            test = tests.get(summary.feature)
            stats_rows.append(
                [
                    drug,
                    summary.feature,
                    repr(summary.rogue_mean),
                    repr(summary.nonrogue_mean),
                    str(summary.rogue_n),
                    str(summary.nonrogue_n),
                    repr(test.t_statistic) if test else "",
                    repr(test.degrees_of_freedom) if test else "",
                    repr(test.p_value) if test else "",
                    repr(ratio) if ratio is not None else "inf",
                ]
            )
        drug_rogue_records = [
            record_by_id[v.tweet_id]
            for v in group
            if v.tweet_id in rogue_ids and v.tweet_id in record_by_id
        ]
        age = features.account_age_fraction(drug_rogue_records) if drug_rogue_records else None
        if age is not None:
            age_rows.append([drug, repr(age), str(len({r.user_id for r in drug_rogue_records}))])
        report_blocks.append(features.statistics_report(summaries, tests, age, drug))

    if not stats_rows:
        raise CoverageError([], what="drug groups with both classes")

    stats_path = _artifact(config, "stats.csv")
    with open(stats_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["drug", "feature", "rogue_mean", "nonrogue_mean", "rogue_n", "nonrogue_n", "t", "df", "p", "ratio"]
        )
        writer.writerows(stats_rows)
    age_path = _artifact(config, "account_age.csv")
    with open(age_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["drug", "rogue_fraction_since_cutoff", "distinct_rogue_users"])
        writer.writerows(age_rows)
    text_path = _artifact(config, "stats.txt")
    text_path.write_text("\n\n".join(report_blocks) + "\n", "utf-8")
    _write_manifest(
        config,
        "stats",
        [feature_path, _artifact(config, "filtered.jsonl")],
        [stats_path, age_path, text_path],
        None,
    )
    print(text_path.read_text("utf-8"))
    return EXIT_OK


def cmd_train(config: PipelineConfig) -> int:
    feature_path = _require_artifact(config, "features.csv", "features")
    vectors, drugs_by_tweet = features.read_features_csv(feature_path)
    outputs = []
    for drug, group in sorted(_group_by_drug(vectors, drugs_by_tweet).items()):
        if len(group) < 2 or not _two_class(group):
            print(f"skipping {drug}: needs both classes", file=sys.stderr)
            continue
        model = classifier.train(group, l2_lambda=config.l2_lambda, seed=config.classifier_seed)
        path = _artifact(config, f"logreg_{drug}.json")
        classifier.save_model(model, path)
        outputs.append(path)
        print(f"trained {drug} on {len(group)} examples -> {path}")
    if not outputs:
        raise CoverageError([], what="drug groups with both classes")
    _write_manifest(config, "train", [feature_path], outputs, config.classifier_seed)
    return EXIT_OK


def cmd_evaluate(config: PipelineConfig) -> int:
    feature_path = _require_artifact(config, "features.csv", "features")
    vectors, drugs_by_tweet = features.read_features_csv(feature_path)
    reports: dict[str, classifier.EvalReport] = {}
    for drug, group in sorted(_group_by_drug(vectors, drugs_by_tweet).items()):
        if len(group) < 4 or not _two_class(group):
            print(f"skipping {drug}: needs both classes", file=sys.stderr)
            continue
        reports[drug] = classifier.evaluate(
            group,
            split_fraction=config.split_fraction,
            runs=config.runs,
            seed=config.classifier_seed,
            l2_lambda=config.l2_lambda,
        )
    if not reports:
        raise CoverageError([], what="drug groups with both classes")
    csv_path = _artifact(config, "eval.csv")
    classifier.export_eval_csv(reports, csv_path)
    text = classifier.eval_report_text(reports)
    text_path = _artifact(config, "eval.txt")
    text_path.write_text(text + "\n", "utf-8")
    _write_manifest(config, "evaluate", [feature_path], [csv_path, text_path], config.classifier_seed)
    print(text)
    return EXIT_OK


def cmd_serve(config: PipelineConfig) -> int:
    import uvicorn

    from .service import build_app_from_artifacts

    app = build_app_from_artifacts(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
    return EXIT_OK


PIPELINE_STAGES = ("ingest", "filter", "topics", "isolate", "features", "stats", "evaluate")


def cmd_pipeline(config: PipelineConfig) -> int:
    """End-to-end run with pauses at the two annotation gates."""
    handlers = {
        "ingest": cmd_ingest,
        "filter": cmd_filter,
        "topics": cmd_topics,
        "isolate": cmd_isolate,
        "features": cmd_features,
        "stats": cmd_stats,
        "evaluate": cmd_evaluate,
    }
    for stage in PIPELINE_STAGES:
        print(f"[pipeline] {stage}")
        handlers[stage](config)
    print("[pipeline] complete")
    return EXIT_OK


_SUBCOMMANDS = {
    "ingest": cmd_ingest,
    "filter": cmd_filter,
    "topics": cmd_topics,
    "serve": cmd_serve,
    "isolate": cmd_isolate,
    "features": cmd_features,
    "stats": cmd_stats,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def build_parser() -> _Parser:
    parser = _Parser(prog="rxwatch", description=__doc__)
    parser.add_argument("--config", help="INI config file")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override a config value (repeatable)",
    )
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value
        config = load_config(args.config, overrides)
        return _SUBCOMMANDS[args.subcommand](config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_USAGE
    except DependencyGateError as exc:
        print(f"dependency gate: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except (SchemaError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
