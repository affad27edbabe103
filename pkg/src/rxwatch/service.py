"""HTTP annotation service: serves topic cards and sample tweets to the
browser UI and persists human labels to the append-only annotation store.

Plain HTTP with JSON bodies; the only identity is the annotator_id field.
Every successful POST is durably appended before the response is sent, so
a crash-restart replays the log to identical state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import btm, corpus, screening
from .screening import TOPIC_LABELS, TWEET_LABELS, AnnotationStore

DEFAULT_SAMPLE_TWEETS = 20

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>rxwatch annotation service</title></head>
<body>
<h1>rxwatch annotation service</h1>
<p>The browser UI is not built. Build the frontend and point
[service] static_dir at its dist/ directory, or use the JSON API:</p>
<ul>
<li>GET /topics</li>
<li>GET /topics/{id}/tweets?offset=0&amp;limit=20</li>
<li>POST /annotations/topic {topic_id, label, annotator_id}</li>
<li>GET /tweets/rogue-candidates</li>
<li>POST /annotations/tweet {tweet_id, label, annotator_id}</li>
<li>GET /progress</li>
</ul>
</body></html>
"""


class TopicAnnotationIn(BaseModel):
    topic_id: int
    label: str
    annotator_id: str
    nonce: str | None = None


class TweetAnnotationIn(BaseModel):
    tweet_id: str
    label: str
    annotator_id: str
    nonce: str | None = None


@dataclass
class ServiceState:
    model: btm.BtmModel
    records: dict[str, corpus.TweetRecord]
    doc_dists: list[btm.DocTopicDist]
    store: AnnotationStore

    def __post_init__(self) -> None:
        # deterministic sample order: highest dominant-topic share first,
        # tweet_id as the tie-break
        self.samples_by_topic: dict[int, list[btm.DocTopicDist]] = {
            topic: [] for topic in range(self.model.k)
        }
        for dist in self.doc_dists:
            if not dist.degenerate:
                self.samples_by_topic[dist.dominant_topic].append(dist)
        for topic in self.samples_by_topic:
            self.samples_by_topic[topic].sort(
                key=lambda d: (-d.proportions[d.dominant_topic], d.tweet_id)
            )


def _tweet_payload(state: ServiceState, dist: btm.DocTopicDist) -> dict:
    record = state.records.get(dist.tweet_id)
    payload = {
        "tweet_id": dist.tweet_id,
        "dominant_topic": dist.dominant_topic,
        "dominant_share": dist.proportions[dist.dominant_topic],
    }
    if record is not None:
        payload.update(
            {
                "text": record.text,
                "has_url": record.url_entity_count > 0,
                "retweet_count": record.retweet_count,
                "favorite_count": record.favorite_count,
                "user_followers_count": record.user_followers_count,
                "user_friends_count": record.user_friends_count,
                "user_statuses_count": record.user_statuses_count,
            }
        )
    return payload


def _pairwise_agreement(current: dict[tuple[str, str], str]) -> float | None:
    """Mean percent agreement over items shared by annotator pairs."""
    by_annotator: dict[str, dict[str, str]] = {}
    for (item_id, annotator_id), label in current.items():
        by_annotator.setdefault(annotator_id, {})[item_id] = label
    scores = []
    for a, b in itertools.combinations(sorted(by_annotator), 2):
        shared = sorted(set(by_annotator[a]) & set(by_annotator[b]))
        if shared:
            scores.append(
                screening.agreement(
                    [by_annotator[a][item] for item in shared],
                    [by_annotator[b][item] for item in shared],
                )
            )
    if not scores:
        return None
    return sum(scores) / len(scores)


def _relevant_topic_set(state: ServiceState) -> set[int]:
    """Topics whose consensus is Relevant, over whatever is annotated so far."""
    annotations = state.store.topic_annotations()
    votes: dict[int, list[screening.TopicLabel]] = {}
    for (topic_id, _annotator), label in screening.current_labels(annotations).items():
        votes.setdefault(topic_id, []).append(label)
    relevant: set[int] = set()
    for topic_id, labels in votes.items():
        counts = {label: labels.count(label) for label in set(labels)}
        best = max(counts.values())
        winners = [label for label, count in counts.items() if count == best]
        if winners == [screening.TopicLabel.RELEVANT]:
            relevant.add(topic_id)
    return relevant


def create_app(state: ServiceState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="rxwatch annotation service")

    @app.get("/topics")
    def get_topics() -> list[dict]:
        current = state.store.current("topic")
        cards = []
        for topic in range(state.model.k):
            annotations = [
                {"annotator_id": annotator, "label": label}
                for (item_id, annotator), label in sorted(current.items())
                if item_id == str(topic)
            ]
            cards.append(
                {
                    "topic_id": topic,
                    "top_words": [
                        {"word": word, "probability": probability}
                        for word, probability in btm.top_words(state.model, topic, 10)
                    ],
                    "sample_tweets": [
                        _tweet_payload(state, dist)
                        for dist in state.samples_by_topic[topic][:DEFAULT_SAMPLE_TWEETS]
                    ],
                    "annotations": annotations,
                }
            )
        return cards

    @app.get("/topics/{topic_id}/tweets")
    def get_topic_tweets(topic_id: int, offset: int = 0, limit: int = DEFAULT_SAMPLE_TWEETS) -> dict:
        if not 0 <= topic_id < state.model.k:
            raise HTTPException(status_code=404, detail=f"unknown topic {topic_id}")
        if offset < 0 or limit < 1:
            raise HTTPException(status_code=422, detail="offset must be >= 0 and limit >= 1")
        samples = state.samples_by_topic[topic_id]
        return {
            "topic_id": topic_id,
            "total": len(samples),
            "offset": offset,
            "tweets": [_tweet_payload(state, dist) for dist in samples[offset : offset + limit]],
        }

    @app.post("/annotations/topic", status_code=201)
    def post_topic_annotation(body: TopicAnnotationIn) -> dict:
        if not 0 <= body.topic_id < state.model.k:
            raise HTTPException(status_code=404, detail=f"unknown topic {body.topic_id}")
        if body.label not in TOPIC_LABELS:
            raise HTTPException(
                status_code=422,
                detail={"error": f"invalid label {body.label!r}", "allowed": list(TOPIC_LABELS)},
            )
        if not body.annotator_id:
            raise HTTPException(status_code=422, detail="annotator_id must be nonempty")
        appended = state.store.append(
            "topic", str(body.topic_id), body.label, body.annotator_id, nonce=body.nonce
        )
        return {"status": "ok", "duplicate": not appended}

    @app.get("/tweets/rogue-candidates")
    def get_rogue_candidates(offset: int = 0, limit: int = 100) -> dict:
        relevant = _relevant_topic_set(state)
        if relevant:
            isolated = screening.isolate_rogue(state.doc_dists, relevant)
        else:
            isolated = []
        dist_by_tweet = {d.tweet_id: d for d in state.doc_dists}
        ordered = sorted(
            isolated,
            key=lambda tweet_id: (
                -dist_by_tweet[tweet_id].proportions[dist_by_tweet[tweet_id].dominant_topic],
                tweet_id,
            ),
        )
        current = state.store.current("tweet")
        annotations_by_tweet: dict[str, list[dict]] = {}
        for (item_id, annotator), label in sorted(current.items()):
            annotations_by_tweet.setdefault(item_id, []).append(
                {"annotator_id": annotator, "label": label}
            )
        page = ordered[offset : offset + limit]
        return {
            "total": len(ordered),
            "offset": offset,
            "rogue_topics": sorted(relevant),
            "tweets": [
                {
                    **_tweet_payload(state, dist_by_tweet[tweet_id]),
                    "annotations": annotations_by_tweet.get(tweet_id, []),
                }
                for tweet_id in page
            ],
        }

    @app.post("/annotations/tweet", status_code=201)
    def post_tweet_annotation(body: TweetAnnotationIn) -> dict:
        if body.tweet_id not in state.records:
            raise HTTPException(status_code=404, detail=f"unknown tweet {body.tweet_id}")
        if body.label not in TWEET_LABELS:
            raise HTTPException(
                status_code=422,
                detail={"error": f"invalid label {body.label!r}", "allowed": list(TWEET_LABELS)},
            )
        if not body.annotator_id:
            raise HTTPException(status_code=422, detail="annotator_id must be nonempty")
        appended = state.store.append(
            "tweet", body.tweet_id, body.label, body.annotator_id, nonce=body.nonce
        )
        return {"status": "ok", "duplicate": not appended}

    @app.get("/progress")
    def get_progress() -> dict:
        topic_current = state.store.current("topic")
        tweet_current = state.store.current("tweet")
        annotated_topics = {item_id for item_id, _ in topic_current}
        annotated_tweets = {item_id for item_id, _ in tweet_current}
        relevant = _relevant_topic_set(state)
        candidates = (
            screening.isolate_rogue(state.doc_dists, relevant) if relevant else []
        )
        rogue_live = None
        candidate_labels = []
        for tweet_id in candidates:
            votes = [label for (item, _a), label in tweet_current.items() if item == tweet_id]
            if votes:
                candidate_labels.append(
                    screening.majority_tweet_label([screening.TweetLabel(v) for v in votes])
                )
        if candidate_labels:
            rogue_live = sum(
                1 for label in candidate_labels if label is screening.TweetLabel.ROGUE
            ) / len(candidate_labels)
        return {
            "topics": {
                "total": state.model.k,
                "annotated": len(annotated_topics),
                "remaining": state.model.k - len(annotated_topics),
            },
            "tweets": {
                "candidates": len(candidates),
                "annotated": len(annotated_tweets & set(candidates)),
                "remaining": len([c for c in candidates if c not in annotated_tweets]),
            },
            "agreement": {
                "topics": _pairwise_agreement(topic_current),
                "tweets": _pairwise_agreement(tweet_current),
            },
            "rogue_precision_live": rogue_live,
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return _PLACEHOLDER_PAGE

    return app


def build_app_from_artifacts(config) -> FastAPI:
    """Assemble the service from pipeline artifacts named in the config."""
    from .cli import read_doc_topics  # local import to avoid a cycle

    out = Path(config.output_dir)
    model_path = out / "btm_model.json"
    dists_path = out / "doc_topics.csv"
    filtered_path = out / "filtered.jsonl"
    for path, producer in ((model_path, "topics"), (dists_path, "topics"), (filtered_path, "filter")):
        if not path.exists():
            from .errors import DependencyGateError

            raise DependencyGateError(
                f"missing artifact {path}; run the '{producer}' subcommand first", required=producer
            )
    model = btm.load_model(model_path)
    records = {
        r.tweet_id: r for r in corpus.ingest_jsonl(filtered_path, schema_mode="lenient")
    }
    doc_dists = read_doc_topics(dists_path)
    store = AnnotationStore(config.store_path)
    state = ServiceState(model=model, records=records, doc_dists=doc_dists, store=store)
    return create_app(state, static_dir=config.static_dir)
