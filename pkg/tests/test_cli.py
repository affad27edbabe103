import csv
import json
from pathlib import Path

import pytest

from rxwatch import cli
from rxwatch.btm import load_model, top_words
from rxwatch.config import load_config
from rxwatch.errors import ConfigError
from rxwatch.screening import AnnotationStore
from rxwatch.synth import SALES_WORDS, make_tweet_stream

from conftest import write_jsonl


def _config_file(tmp_path, raw_path, out_dir, store, extra=""):
    path = tmp_path / "config.ini"
    path.write_text(
        f"""
[input]
raw = {raw_path}
schema_mode = lenient

[btm]
k = auto
cap = 12
iterations = 60
seed = 7

[isolation]
store = {store}

[classifier]
runs = 3
seed = 11

[output]
dir = {out_dir}
{extra}
"""
    )
    return str(path)


@pytest.fixture
def small_stream(tmp_path):
    stream = make_tweet_stream(
        tmp_path / "raw.jsonl", n_rogue=60, n_regular=90, n_noise=20, seed=5
    )
    out_dir = tmp_path / "out"
    store = tmp_path / "annotations.jsonl"
    config_path = _config_file(tmp_path, stream.path, out_dir, store)
    return stream, config_path, out_dir, store


def _annotate_everything(out_dir: Path, store_path: Path, stream) -> None:
    """Play the two human passes from the planted ground truth."""
    model = load_model(out_dir / "btm_model.json")
    store = AnnotationStore(store_path)
    for topic in range(model.k):
        words = {w for w, _ in top_words(model, topic, 10)}
        label = "Relevant" if len(words & set(SALES_WORDS)) >= 3 else "Irrelevant"
        store.append("topic", str(topic), label, "tester")
    dists = cli.read_doc_topics(out_dir / "doc_topics.csv")
    for dist in dists:
        label = "Rogue" if dist.tweet_id in stream.rogue_ids else "NonRogue"
        store.append("tweet", dist.tweet_id, label, "tester")


# --- individual subcommands ----------------------------------------------


def test_filter_volume_report_on_three_record_fixture(tmp_path, capsys, raw_tweet_obj):
    import copy

    objs = []
    for i, text in enumerate(
        ["I love codeine dreams", "aspirin only", "just plain chatter"]
    ):
        obj = copy.deepcopy(raw_tweet_obj)
        obj["id_str"] = str(i)
        obj["text"] = text
        objs.append(obj)
    raw = write_jsonl(tmp_path / "raw.jsonl", objs)
    out_dir = tmp_path / "out"
    config = _config_file(tmp_path, raw, out_dir, tmp_path / "store.jsonl")
    assert cli.main(["--config", config, "ingest"]) == 0
    assert cli.main(["--config", config, "filter"]) == 0
    rows = list(csv.reader(open(out_dir / "volume.csv")))
    volume = {row[0]: int(row[1]) for row in rows[1:]}
    assert volume["codeine"] == 1
    assert volume["dropped"] == 2
    assert all(volume[d] == 0 for d in volume if d not in ("codeine", "dropped"))


def test_missing_upstream_artifact_is_dependency_error(tmp_path, capsys):
    out_dir = tmp_path / "out"
    config = _config_file(tmp_path, "", out_dir, tmp_path / "s.jsonl")
    assert cli.main(["--config", config, "topics"]) == cli.EXIT_DEPENDENCY
    err = capsys.readouterr().err
    assert "filter" in err


def test_config_error_exit_code_and_diagnostics(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text("[btm]\niterations = -3\nbeta = 0\n")
    assert cli.main(["--config", str(config), "ingest"]) == cli.EXIT_USAGE
    err = capsys.readouterr().err
    assert "iterations" in err and "beta" in err


def test_unknown_key_is_config_error(tmp_path):
    config = tmp_path / "bad.ini"
    config.write_text("[btm]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(config)


def test_usage_error_for_bad_subcommand(capsys):
    assert cli.main(["frobnicate"]) == cli.EXIT_USAGE


def test_config_overrides_via_set_flag(tmp_path):
    config = load_config(None, {"btm.seed": "3", "keywords.drugs": "codeine, vicodin"})
    assert config.btm_seed == 3
    assert config.drugs == ("codeine", "vicodin")


def test_data_error_exit_code(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    raw.write_text('{"id_str": "1", "created_at": "2015-06-01T00:00:00Z", "text": "codeine", "retweet_count": -4, "user": {"id_str": "u", "created_at": "2013-01-01T00:00:00Z"}}\n')
    out_dir = tmp_path / "out"
    config = _config_file(tmp_path, raw, out_dir, tmp_path / "s.jsonl")
    assert cli.main(["--config", config, "ingest"]) == cli.EXIT_DATA


# --- pipeline with gates --------------------------------------------------


def test_pipeline_stops_at_topic_annotation_gate(small_stream, capsys):
    _, config, out_dir, _ = small_stream
    code = cli.main(["--config", config, "pipeline"])
    assert code == cli.EXIT_DEPENDENCY
    err = capsys.readouterr().err
    assert "serve" in err or "rogue_topics" in err
    # artifacts before the gate exist
    assert (out_dir / "btm_model.json").exists()
    assert (out_dir / "doc_topics.csv").exists()


def test_pipeline_stops_at_tweet_annotation_gate(small_stream, capsys):
    stream, config, out_dir, store_path = small_stream
    assert cli.main(["--config", config, "pipeline"]) == cli.EXIT_DEPENDENCY
    # first pass only: label all topics, no tweet annotations
    model = load_model(out_dir / "btm_model.json")
    store = AnnotationStore(store_path)
    for topic in range(model.k):
        words = {w for w, _ in top_words(model, topic, 10)}
        label = "Relevant" if len(words & set(SALES_WORDS)) >= 3 else "Irrelevant"
        store.append("topic", str(topic), label, "tester")
    code = cli.main(["--config", config, "pipeline"])
    assert code == cli.EXIT_DEPENDENCY
    assert "tweet annotation pass incomplete" in capsys.readouterr().err


def test_pipeline_completes_after_both_passes(small_stream, capsys):
    stream, config, out_dir, store_path = small_stream
    cli.main(["--config", config, "pipeline"])  # through topics
    _annotate_everything(out_dir, store_path, stream)
    code = cli.main(["--config", config, "pipeline"])
    assert code == 0
    for artifact in (
        "corpus.jsonl",
        "filtered.jsonl",
        "volume.csv",
        "btm_model.json",
        "topic_summary.txt",
        "doc_topics.csv",
        "isolated.csv",
        "features.csv",
        "labels.csv",
        "stats.csv",
        "stats.txt",
        "account_age.csv",
        "eval.csv",
        "eval.txt",
    ):
        assert (out_dir / artifact).exists(), artifact
    # manifests recorded with config hash and input digests
    manifest = json.loads((out_dir / "manifests" / "topics.manifest.json").read_text())
    assert manifest["config_hash"]
    assert manifest["inputs"]
    assert manifest["seed"] == 7


def test_train_subcommand_writes_models(small_stream):
    stream, config, out_dir, store_path = small_stream
    cli.main(["--config", config, "pipeline"])
    _annotate_everything(out_dir, store_path, stream)
    assert cli.main(["--config", config, "pipeline"]) == 0
    assert cli.main(["--config", config, "train"]) == 0
    assert (out_dir / "logreg_all.json").exists()


def test_explicit_rogue_topics_skip_store_for_isolation(small_stream):
    stream, config, out_dir, store_path = small_stream
    cli.main(["--config", config, "pipeline"])  # builds topics
    # isolate with explicit topic indices, no store at all
    code = cli.main(["--config", config, "--set", "isolation.rogue_topics=0", "isolate"])
    assert code == 0
    rows = list(csv.reader(open(out_dir / "isolated.csv")))
    assert rows[0] == ["tweet_id", "dominant_topic"]
    assert all(row[1] == "0" for row in rows[1:])


def test_evaluate_runs_1_perfect_fixture(tmp_path):
    # hand-built features.csv that any sane classifier separates perfectly
    out_dir = tmp_path / "out"
    out_dir.mkdir()
    header = "tweet_id,retweeted_status,retweet_count,favorite_count,in_reply_status_id,possibly_sensitive,entities_urls,entities_symbols,entities_hashtags,user_verified,user_friends_count,user_follower_count,user_statuses_count,user_favorites_count,label,drugs"
    lines = [header]
    for i in range(12):
        lines.append(f"r{i},0.0,0.0,0.0,0.0,0.0,1.0,0.0,0.0,0.0,10.0,20.0,160000.0,0.0,Rogue,codeine")
        lines.append(f"g{i},0.0,50.0,40.0,0.0,0.0,0.0,0.0,0.0,0.0,1000.0,2000.0,30000.0,5000.0,NonRogue,codeine")
    (out_dir / "features.csv").write_text("\n".join(lines) + "\n")
    config = tmp_path / "config.ini"
    config.write_text(f"[classifier]\nruns = 1\nseed = 2\n\n[output]\ndir = {out_dir}\n")
    assert cli.main(["--config", str(config), "evaluate"]) == 0
    rows = list(csv.reader(open(out_dir / "eval.csv")))
    header_row, *data = rows
    accuracy_column = header_row.index("accuracy")
    mean_rows = [row for row in data if row[1] == "mean" and row[0] == "all"]
    assert float(mean_rows[0][accuracy_column]) == 1.0


def test_serve_app_builds_from_artifacts(small_stream):
    from fastapi.testclient import TestClient

    from rxwatch.service import build_app_from_artifacts

    stream, config_path, out_dir, store = small_stream
    config = load_config(config_path)
    with pytest.raises(Exception):  # no artifacts yet
        build_app_from_artifacts(config)
    cli.main(["--config", config_path, "pipeline"])  # runs through topics
    client = TestClient(build_app_from_artifacts(config))
    cards = client.get("/topics").json()
    assert len(cards) == load_model(out_dir / "btm_model.json").k
    assert all(len(card["top_words"]) == 10 for card in cards)
    assert client.get("/progress").status_code == 200


def test_ingest_merges_files_in_argument_order(tmp_path, raw_tweet_obj):
    import copy

    first, second = [], []
    for i in range(2):
        obj = copy.deepcopy(raw_tweet_obj)
        obj["id_str"] = f"a{i}"
        first.append(obj)
    for i in range(2):
        obj = copy.deepcopy(raw_tweet_obj)
        obj["id_str"] = f"b{i}"
        second.append(obj)
    path_a = write_jsonl(tmp_path / "a.jsonl", first)
    path_b = write_jsonl(tmp_path / "b.jsonl", second)
    out_dir = tmp_path / "out"
    config = _config_file(tmp_path, f"{path_b}, {path_a}", out_dir, tmp_path / "s.jsonl")
    assert cli.main(["--config", config, "ingest"]) == 0
    from rxwatch.corpus import ingest_jsonl

    ids = [r.tweet_id for r in ingest_jsonl(out_dir / "corpus.jsonl")]
    assert ids == ["b0", "b1", "a0", "a1"]


def test_rerun_is_byte_identical(small_stream):
    stream, config, out_dir, store_path = small_stream
    cli.main(["--config", config, "pipeline"])
    _annotate_everything(out_dir, store_path, stream)
    assert cli.main(["--config", config, "pipeline"]) == 0
    before = {
        p.name: p.read_bytes() for p in out_dir.glob("*.csv")
    }
    assert cli.main(["--config", config, "pipeline"]) == 0
    after = {p.name: p.read_bytes() for p in out_dir.glob("*.csv")}
    assert before == after
