from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rxwatch.btm import DocTopicDist
from rxwatch.errors import AlignmentError, CoverageError
from rxwatch.screening import (
    AnnotationStore,
    ClassLabel,
    TopicAnnotation,
    TopicLabel,
    TweetAnnotation,
    TweetLabel,
    agreement,
    consensus_topic_labels,
    export_labels_csv,
    isolate_rogue,
    label_dataset,
    majority_tweet_label,
    rogue_precision,
)

from conftest import make_record

T0 = datetime(2015, 8, 1, tzinfo=timezone.utc)


def _dist(tweet_id, proportions, degenerate=False):
    best = max(range(len(proportions)), key=lambda i: (proportions[i], -i))
    return DocTopicDist(
        tweet_id=tweet_id,
        proportions=tuple(proportions),
        dominant_topic=best,
        degenerate=degenerate,
    )


def _topic_ann(topic, label, annotator="a1", minute=0):
    return TopicAnnotation(
        topic_id=topic, label=label, annotator_id=annotator, timestamp=T0 + timedelta(minutes=minute)
    )


def _tweet_ann(tweet_id, label, annotator="a1", minute=0):
    return TweetAnnotation(
        tweet_id=tweet_id, label=label, annotator_id=annotator, timestamp=T0 + timedelta(minutes=minute)
    )


# --- isolate_rogue -------------------------------------------------------


def test_isolate_includes_dominant_in_set():
    assert isolate_rogue([_dist("t", [0.7, 0.2, 0.1])], {0}) == ["t"]


def test_isolate_excludes_other_dominant():
    assert isolate_rogue([_dist("t", [0.4, 0.6])], {0}) == []


def test_isolate_skips_degenerate_docs():
    assert isolate_rogue([_dist("t", [0.5, 0.5], degenerate=True)], {0}) == []


def test_isolate_matches_bruteforce_on_200_synthetic():
    import numpy as np

    rng = np.random.default_rng(42)
    dists = []
    for i in range(200):
        proportions = rng.dirichlet(np.ones(5))
        dists.append(_dist(f"t{i}", [float(p) for p in proportions]))
    rogue = {1, 3}
    got = isolate_rogue(dists, rogue)
    expected = [
        d.tweet_id
        for d in dists
        if max(range(5), key=lambda z: d.proportions[z]) in rogue
    ]
    assert got == expected


def test_isolate_idempotent_and_subset():
    dists = [_dist(f"t{i}", [0.6, 0.4] if i % 2 else [0.3, 0.7]) for i in range(10)]
    ids = isolate_rogue(dists, {0})
    assert set(ids) <= {d.tweet_id for d in dists}
    kept = [d for d in dists if d.tweet_id in ids]
    assert isolate_rogue(kept, {0}) == ids


def test_isolate_validates_rogue_topics():
    with pytest.raises(ValueError):
        isolate_rogue([_dist("t", [1.0, 0.0])], set())
    with pytest.raises(ValueError):
        isolate_rogue([_dist("t", [1.0, 0.0])], {5})


# --- agreement -----------------------------------------------------------


def test_agreement_identical_is_one():
    labels = [TopicLabel.RELEVANT, TopicLabel.IRRELEVANT, TopicLabel.RELEVANT]
    assert agreement(labels, list(labels)) == 1.0


def test_agreement_disjoint_is_zero():
    a = [TweetLabel.ROGUE] * 4
    b = [TweetLabel.NONROGUE] * 4
    assert agreement(a, b) == 0.0


def test_agreement_seven_of_ten():
    a = list("xxxxxxxyyy")
    b = list("xxxxxxxzzz")
    assert agreement(a, b) == pytest.approx(0.7)


def test_agreement_length_mismatch_is_alignment_error():
    with pytest.raises(AlignmentError):
        agreement(["x"], ["x", "y"])
    with pytest.raises(AlignmentError):
        agreement([], [])


@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=30), st.data())
@settings(max_examples=80, deadline=None)
def test_agreement_symmetric_property(a, data):
    b = data.draw(st.lists(st.sampled_from("abc"), min_size=len(a), max_size=len(a)))
    assert agreement(a, b) == agreement(b, a)


# --- rogue precision -----------------------------------------------------


def test_precision_nine_of_ten():
    isolated = [f"t{i}" for i in range(10)]
    anns = [
        _tweet_ann(t, TweetLabel.ROGUE if i < 9 else TweetLabel.NONROGUE)
        for i, t in enumerate(isolated)
    ]
    assert rogue_precision(isolated, anns) == pytest.approx(0.9)


def test_precision_all_nonrogue_is_zero():
    isolated = ["a", "b"]
    anns = [_tweet_ann(t, TweetLabel.NONROGUE) for t in isolated]
    assert rogue_precision(isolated, anns) == 0.0


def test_precision_57_of_60_planted():
    isolated = [f"t{i}" for i in range(60)]
    anns = [
        _tweet_ann(t, TweetLabel.ROGUE if i < 57 else TweetLabel.NONROGUE)
        for i, t in enumerate(isolated)
    ]
    assert rogue_precision(isolated, anns) == pytest.approx(0.95)


def test_precision_missing_annotation_lists_ids():
    with pytest.raises(CoverageError) as excinfo:
        rogue_precision(["a", "b"], [_tweet_ann("a", TweetLabel.ROGUE)])
    assert excinfo.value.missing == ["b"]


def test_precision_majority_tie_goes_nonrogue():
    anns = [
        _tweet_ann("t", TweetLabel.ROGUE, annotator="a1"),
        _tweet_ann("t", TweetLabel.NONROGUE, annotator="a2"),
    ]
    assert rogue_precision(["t"], anns) == 0.0
    assert majority_tweet_label([TweetLabel.ROGUE, TweetLabel.NONROGUE]) is TweetLabel.NONROGUE


def test_precision_uses_latest_label_per_annotator():
    anns = [
        _tweet_ann("t", TweetLabel.NONROGUE, minute=0),
        _tweet_ann("t", TweetLabel.ROGUE, minute=5),
    ]
    assert rogue_precision(["t"], anns) == 1.0


# --- label_dataset -------------------------------------------------------


def _small_world():
    records = [make_record(tweet_id=f"t{i}") for i in range(4)]
    dists = [
        _dist("t0", [0.9, 0.1]),
        _dist("t1", [0.2, 0.8]),
        _dist("t2", [0.7, 0.3]),
        _dist("t3", [0.5, 0.5], degenerate=True),
    ]
    return records, dists


def test_label_dataset_no_relevant_topics_all_nonrogue():
    records, dists = _small_world()
    topics = [_topic_ann(0, TopicLabel.IRRELEVANT), _topic_ann(1, TopicLabel.IRRELEVANT)]
    tweets = [_tweet_ann("t0", TweetLabel.ROGUE)]
    labeled = label_dataset(records, dists, topics, tweets)
    assert all(label is ClassLabel.NONROGUE for _, label in labeled)


def test_label_dataset_relevant_plus_rogue_annotation():
    records, dists = _small_world()
    topics = [_topic_ann(0, TopicLabel.RELEVANT), _topic_ann(1, TopicLabel.IRRELEVANT)]
    tweets = [
        _tweet_ann("t0", TweetLabel.ROGUE),
        _tweet_ann("t2", TweetLabel.ROGUE),
    ]
    labeled = dict(label_dataset(records, dists, topics, tweets))
    assert labeled["t0"] is ClassLabel.ROGUE
    assert labeled["t2"] is ClassLabel.ROGUE
    assert labeled["t1"] is ClassLabel.NONROGUE  # dominant topic not relevant
    assert labeled["t3"] is ClassLabel.NONROGUE  # degenerate


def test_label_dataset_needs_tweet_annotation_for_rogue():
    records, dists = _small_world()
    topics = [_topic_ann(0, TopicLabel.RELEVANT), _topic_ann(1, TopicLabel.RELEVANT)]
    labeled = dict(label_dataset(records, dists, topics, []))
    assert set(labeled.values()) == {ClassLabel.NONROGUE}


def test_label_dataset_unannotated_topic_is_coverage_error():
    records, dists = _small_world()
    with pytest.raises(CoverageError):
        label_dataset(records, dists, [_topic_ann(0, TopicLabel.RELEVANT)], [])


def test_label_dataset_hand_labeled_twenty_tweet_fixture():
    # hand-built: topics 0/2 relevant, 1 irrelevant, 3 needs-investigation;
    # tweets t0..t19 split across topics round-robin; even tweets annotated
    # rogue, odd nonrogue
    records = [make_record(tweet_id=f"t{i}") for i in range(20)]
    proportions = {
        0: [0.7, 0.1, 0.1, 0.1],
        1: [0.1, 0.7, 0.1, 0.1],
        2: [0.1, 0.1, 0.7, 0.1],
        3: [0.1, 0.1, 0.1, 0.7],
    }
    dists = [_dist(f"t{i}", proportions[i % 4]) for i in range(20)]
    topics = [
        _topic_ann(0, TopicLabel.RELEVANT),
        _topic_ann(1, TopicLabel.IRRELEVANT),
        _topic_ann(2, TopicLabel.RELEVANT),
        _topic_ann(3, TopicLabel.NEEDS_INVESTIGATION),
    ]
    tweets = [
        _tweet_ann(f"t{i}", TweetLabel.ROGUE if i % 2 == 0 else TweetLabel.NONROGUE)
        for i in range(20)
    ]
    labeled = dict(label_dataset(records, dists, topics, tweets))
    # by hand: rogue <=> dominant topic in {0, 2} and even index
    expected_rogue = {f"t{i}" for i in range(20) if i % 4 in (0, 2) and i % 2 == 0}
    assert {t for t, label in labeled.items() if label is ClassLabel.ROGUE} == expected_rogue


def test_label_dataset_never_rogue_without_relevant_topic_property():
    import numpy as np

    rng = np.random.default_rng(7)
    records = [make_record(tweet_id=f"t{i}") for i in range(30)]
    dists = [
        _dist(f"t{i}", [float(x) for x in rng.dirichlet(np.ones(3))]) for i in range(30)
    ]
    topics = [
        _topic_ann(0, TopicLabel.RELEVANT),
        _topic_ann(1, TopicLabel.IRRELEVANT),
        _topic_ann(2, TopicLabel.NEEDS_INVESTIGATION),
    ]
    tweets = [_tweet_ann(f"t{i}", TweetLabel.ROGUE) for i in range(30)]
    labeled = dict(label_dataset(records, dists, topics, tweets))
    for dist in dists:
        if labeled[dist.tweet_id] is ClassLabel.ROGUE:
            assert dist.dominant_topic == 0


def test_consensus_majority_and_tie_rules():
    anns = [
        _topic_ann(0, TopicLabel.RELEVANT, annotator="a1"),
        _topic_ann(0, TopicLabel.RELEVANT, annotator="a2"),
        _topic_ann(0, TopicLabel.IRRELEVANT, annotator="a3"),
        _topic_ann(1, TopicLabel.RELEVANT, annotator="a1"),
        _topic_ann(1, TopicLabel.IRRELEVANT, annotator="a2"),
    ]
    consensus = consensus_topic_labels(anns, topic_count=2)
    assert consensus[0] is TopicLabel.RELEVANT
    assert consensus[1] is TopicLabel.NEEDS_INVESTIGATION  # tie


# --- annotation store ----------------------------------------------------


def test_store_append_and_replay(tmp_path):
    path = tmp_path / "store.jsonl"
    store = AnnotationStore(path)
    store.append("topic", "0", "Relevant", "a1")
    store.append("topic", "1", "Irrelevant", "a1")
    store.append("tweet", "t9", "Rogue", "a1")
    reopened = AnnotationStore(path)
    assert reopened.current("topic") == {("0", "a1"): "Relevant", ("1", "a1"): "Irrelevant"}
    assert reopened.current("tweet") == {("t9", "a1"): "Rogue"}


def test_store_last_write_wins(tmp_path):
    store = AnnotationStore(tmp_path / "s.jsonl")
    store.append("topic", "0", "Relevant", "a1")
    store.append("topic", "0", "Irrelevant", "a1")
    assert store.current("topic")[("0", "a1")] == "Irrelevant"
    assert len(store.events("topic")) == 2  # full history retained


def test_store_rejects_bad_labels(tmp_path):
    store = AnnotationStore(tmp_path / "s.jsonl")
    with pytest.raises(ValueError):
        store.append("topic", "0", "Maybe", "a1")
    with pytest.raises(ValueError):
        store.append("tweet", "t", "Relevant", "a1")


def test_store_nonce_deduplication(tmp_path):
    store = AnnotationStore(tmp_path / "s.jsonl")
    assert store.append("tweet", "t", "Rogue", "a1", nonce="n1") is True
    assert store.append("tweet", "t", "Rogue", "a1", nonce="n1") is False
    assert len(store.events("tweet")) == 1
    # a *different* label with the same nonce is a new event
    assert store.append("tweet", "t", "NonRogue", "a1", nonce="n1") is True


def test_store_concurrent_appends(tmp_path):
    import threading

    store = AnnotationStore(tmp_path / "s.jsonl")

    def worker(annotator):
        for i in range(25):
            store.append("topic", str(i % 5), "Relevant", annotator)

    threads = [threading.Thread(target=worker, args=(f"a{n}",)) for n in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(store.events()) == 100
    replayed = AnnotationStore(store.path)
    assert len(replayed.events()) == 100


def test_export_labels_csv(tmp_path):
    path = tmp_path / "labels.csv"
    export_labels_csv([("t1", ClassLabel.ROGUE), ("t2", ClassLabel.NONROGUE)], path)
    assert path.read_text().splitlines() == ["tweet_id,label", "t1,Rogue", "t2,NonRogue"]
