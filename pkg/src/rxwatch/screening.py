"""Human screening: annotation storage, rogue isolation by dominant topic,
agreement and precision diagnostics, and the labeled-dataset export.

Annotations are append-only events in a JSONL log; the current label per
(item, annotator) is the last one written.  The log replays to identical
state after a restart.
"""

from __future__ import annotations

import csv
import json
import os
import threading
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .btm import DocTopicDist
from .corpus import TweetRecord
from .errors import AlignmentError, CoverageError


class TopicLabel(str, Enum):
    RELEVANT = "Relevant"
    IRRELEVANT = "Irrelevant"
    NEEDS_INVESTIGATION = "NeedsInvestigation"


class TweetLabel(str, Enum):
    ROGUE = "Rogue"
    NONROGUE = "NonRogue"


# the classifier consumes the same two-value label set
ClassLabel = TweetLabel

TOPIC_LABELS = tuple(label.value for label in TopicLabel)
TWEET_LABELS = tuple(label.value for label in TweetLabel)


@dataclass(frozen=True)
class TopicAnnotation:
    topic_id: int
    label: TopicLabel
    annotator_id: str
    timestamp: datetime


@dataclass(frozen=True)
class TweetAnnotation:
    tweet_id: str
    label: TweetLabel
    annotator_id: str
    timestamp: datetime


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


class AnnotationStore:
    """Append-only annotation log backed by a JSONL file.

    One event per line: {"kind", "item_id", "label", "annotator_id",
    "timestamp", "nonce"?}.  Appends are serialized through a lock and
    fsync'd before the call returns; identical (kind, item, annotator,
    label, nonce) events are deduplicated so client retries are idempotent.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._events: list[dict] = []
        self._nonces: set[tuple] = set()
        if self.path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.path, "r", encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                event = json.loads(line)
                self._events.append(event)
                if event.get("nonce"):
                    self._nonces.add(self._nonce_key(event))

    @staticmethod
    def _nonce_key(event: dict) -> tuple:
        return (
            event["kind"],
            event["item_id"],
            event["annotator_id"],
            event["label"],
            event["nonce"],
        )

    def append(
        self,
        kind: str,
        item_id: str,
        label: str,
        annotator_id: str,
        timestamp: datetime | None = None,
        nonce: str | None = None,
    ) -> bool:
        """Durably append one annotation event.

        Returns False when a nonce'd duplicate was suppressed.
        """
        if kind == "topic":
            if label not in TOPIC_LABELS:
                raise ValueError(f"topic label must be one of {TOPIC_LABELS}, got {label!r}")
        elif kind == "tweet":
            if label not in TWEET_LABELS:
                raise ValueError(f"tweet label must be one of {TWEET_LABELS}, got {label!r}")
        else:
            raise ValueError(f"kind must be 'topic' or 'tweet', got {kind!r}")
        if not annotator_id:
            raise ValueError("annotator_id must be nonempty")
        event = {
            "kind": kind,
            "item_id": str(item_id),
            "label": label,
            "annotator_id": annotator_id,
            "timestamp": (timestamp or _utcnow()).isoformat(),
        }
        if nonce is not None:
            event["nonce"] = nonce
        with self._lock:
            if nonce is not None and self._nonce_key(event) in self._nonces:
                return False
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(event, sort_keys=True) + "\n")
                handle.flush()
                os.fsync(handle.fileno())
            self._events.append(event)
            if nonce is not None:
                self._nonces.add(self._nonce_key(event))
        return True

    def events(self, kind: str | None = None) -> list[dict]:
        with self._lock:
            return [e for e in self._events if kind is None or e["kind"] == kind]

    def current(self, kind: str) -> dict[tuple[str, str], str]:
        """Latest label per (item_id, annotator_id), in append order."""
        state: dict[tuple[str, str], str] = {}
        for event in self.events(kind):
            state[(event["item_id"], event["annotator_id"])] = event["label"]
        return state

    def topic_annotations(self) -> list[TopicAnnotation]:
        out = []
        for event in self.events("topic"):
            out.append(
                TopicAnnotation(
                    topic_id=int(event["item_id"]),
                    label=TopicLabel(event["label"]),
                    annotator_id=event["annotator_id"],
                    timestamp=datetime.fromisoformat(event["timestamp"]),
                )
            )
        return out

    def tweet_annotations(self) -> list[TweetAnnotation]:
        out = []
        for event in self.events("tweet"):
            out.append(
                TweetAnnotation(
                    tweet_id=event["item_id"],
                    label=TweetLabel(event["label"]),
                    annotator_id=event["annotator_id"],
                    timestamp=datetime.fromisoformat(event["timestamp"]),
                )
            )
        return out


def current_labels(annotations: Iterable) -> dict[tuple, object]:
    """Latest label per (item, annotator) from a sequence of annotations."""
    state: dict[tuple, object] = {}
    for ann in annotations:
        if isinstance(ann, TopicAnnotation):
            key = (ann.topic_id, ann.annotator_id)
        else:
            key = (ann.tweet_id, ann.annotator_id)
        previous = state.get(key)
        if previous is None or ann.timestamp >= previous[1]:
            state[key] = (ann.label, ann.timestamp)
    return {key: value[0] for key, value in state.items()}


def isolate_rogue(doc_dists: Sequence[DocTopicDist], rogue_topics: set[int]) -> list[str]:
    """Tweet ids whose dominant topic is rogue, input order preserved.

    Degenerate documents (zero biterms) never qualify.
    """
    if not rogue_topics:
        raise ValueError("rogue_topics must be nonempty")
    k = len(doc_dists[0].proportions) if doc_dists else None
    for topic in rogue_topics:
        if k is not None and not 0 <= topic < k:
            raise ValueError(f"rogue topic {topic} out of range for k={k}")
    return [
        dist.tweet_id
        for dist in doc_dists
        if not dist.degenerate and dist.dominant_topic in rogue_topics
    ]


def agreement(a: Sequence, b: Sequence) -> float:
    """Simple percent agreement between two aligned label sequences."""
    if len(a) != len(b):
        raise AlignmentError(f"label sequences differ in length: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise AlignmentError("cannot compute agreement on empty sequences")
    return sum(1 for x, y in zip(a, b) if x == y) / len(a)


def majority_tweet_label(labels: Iterable[TweetLabel]) -> TweetLabel:
    """Majority vote; ties are conservatively NonRogue."""
    counts = Counter(labels)
    if counts[TweetLabel.ROGUE] > counts[TweetLabel.NONROGUE]:
        return TweetLabel.ROGUE
    return TweetLabel.NONROGUE


def rogue_precision(isolated: Sequence[str], annotations: Sequence[TweetAnnotation]) -> float:
    """Fraction of isolated tweets whose majority annotation is Rogue."""
    per_tweet = current_labels(annotations)
    votes: dict[str, list[TweetLabel]] = {}
    for (tweet_id, _annotator), label in per_tweet.items():
        votes.setdefault(tweet_id, []).append(label)
    missing = [tweet_id for tweet_id in isolated if tweet_id not in votes]
    if missing:
        raise CoverageError(missing, what="tweets")
    if not isolated:
        raise ValueError("no isolated tweets to score")
    rogue = sum(1 for tweet_id in isolated if majority_tweet_label(votes[tweet_id]) is TweetLabel.ROGUE)
    return rogue / len(isolated)


def consensus_topic_labels(
    annotations: Sequence[TopicAnnotation], topic_count: int
) -> dict[int, TopicLabel]:
    """Per-topic consensus: majority of annotators' current labels.

    Ties fall back to NeedsInvestigation, which is treated as non-rogue
    until a second annotation pass resolves it.  Raises CoverageError when
    any topic has no annotation.
    """
    per_topic_votes: dict[int, list[TopicLabel]] = {t: [] for t in range(topic_count)}
    for (topic_id, _annotator), label in current_labels(annotations).items():
        if topic_id in per_topic_votes:
            per_topic_votes[topic_id].append(label)
    missing = [str(t) for t, votes in per_topic_votes.items() if not votes]
    if missing:
        raise CoverageError(missing, what="topics")
    consensus: dict[int, TopicLabel] = {}
    for topic_id, votes in per_topic_votes.items():
        counts = Counter(votes)
        best, best_count = counts.most_common(1)[0]
        if sum(1 for c in counts.values() if c == best_count) > 1:
            consensus[topic_id] = TopicLabel.NEEDS_INVESTIGATION
        else:
            consensus[topic_id] = best
    return consensus


def relevant_topics(annotations: Sequence[TopicAnnotation], topic_count: int) -> set[int]:
    consensus = consensus_topic_labels(annotations, topic_count)
    return {t for t, label in consensus.items() if label is TopicLabel.RELEVANT}


def label_dataset(
    records: Sequence[TweetRecord],
    doc_dists: Sequence[DocTopicDist],
    topic_annotations: Sequence[TopicAnnotation],
    tweet_annotations: Sequence[TweetAnnotation],
) -> list[tuple[str, ClassLabel]]:
    """Final class label per tweet.

    Rogue requires both passes to agree: the tweet's dominant topic carries
    a Relevant consensus AND the tweet's own majority annotation is Rogue.
    Everything else is NonRogue.
    """
    topic_count = len(doc_dists[0].proportions) if doc_dists else 0
    rogue_topic_set = relevant_topics(topic_annotations, topic_count)
    return label_dataset_with_topics(records, doc_dists, rogue_topic_set, tweet_annotations)


def label_dataset_with_topics(
    records: Sequence[TweetRecord],
    doc_dists: Sequence[DocTopicDist],
    rogue_topic_set: set[int],
    tweet_annotations: Sequence[TweetAnnotation],
) -> list[tuple[str, ClassLabel]]:
    """label_dataset with an explicit rogue-topic set (config overrides)."""
    dist_by_tweet = {dist.tweet_id: dist for dist in doc_dists}

    votes: dict[str, list[TweetLabel]] = {}
    for (tweet_id, _annotator), label in current_labels(tweet_annotations).items():
        votes.setdefault(tweet_id, []).append(label)

    labeled: list[tuple[str, ClassLabel]] = []
    for record in records:
        dist = dist_by_tweet.get(record.tweet_id)
        label = ClassLabel.NONROGUE
        if (
            dist is not None
            and not dist.degenerate
            and dist.dominant_topic in rogue_topic_set
            and majority_tweet_label(votes.get(record.tweet_id, [])) is TweetLabel.ROGUE
        ):
            label = ClassLabel.ROGUE
        labeled.append((record.tweet_id, label))
    return labeled


def export_labels_csv(labeled: Sequence[tuple[str, ClassLabel]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tweet_id", "label"])
        for tweet_id, label in labeled:
            writer.writerow([tweet_id, label.value])
