"""Tweet corpus handling: JSONL ingestion, drug-keyword filtering,
tokenization, and document-term statistics.

Input files hold one tweet object per line using the public tweet-object
field names (id_str, text, created_at, entities.urls, user.friends_count,
...).  ``serialize_jsonl`` writes a flat normalized form that
``ingest_jsonl`` also accepts, so ingest -> serialize -> ingest round-trips
exactly.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import DegenerateCorpusError, SchemaError

DEFAULT_DRUG_NAMES = frozenset(
    {"percocet", "codeine", "oxycodone", "oxycontin", "hydrocodone", "vicodin", "fentanyl"}
)

# classic streaming-API timestamp, e.g. "Wed Jun 17 10:22:01 +0000 2015"
_CLASSIC_TIME_FORMAT = "%a %b %d %H:%M:%S %z %Y"

_WORD_RE = re.compile(r"[a-z0-9]+")
_PUNCT_STRIP_RE = re.compile(r"[^\w]|_", flags=re.UNICODE)


@dataclass(frozen=True)
class TweetRecord:
    """One ingested tweet plus the raw metadata backing the 13 features."""

    tweet_id: str
    created_at: datetime
    text: str
    retweeted_status_present: bool
    retweet_count: int
    favorite_count: int
    in_reply_to_status_id: str | None
    possibly_sensitive: bool | None
    url_entity_count: int
    hashtag_entity_count: int
    symbol_entity_count: int
    user_id: str
    user_verified: bool
    user_friends_count: int
    user_followers_count: int
    user_statuses_count: int
    user_favourites_count: int
    user_created_at: datetime
    matched_keywords: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.tweet_id:
            raise ValueError("tweet_id must be nonempty")
        for name in (
            "retweet_count",
            "favorite_count",
            "url_entity_count",
            "hashtag_entity_count",
            "symbol_entity_count",
            "user_friends_count",
            "user_followers_count",
            "user_statuses_count",
            "user_favourites_count",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class KeywordSet:
    """Lowercase drug names used to filter the stream."""

    drug_names: frozenset[str] = DEFAULT_DRUG_NAMES

    def __post_init__(self) -> None:
        if not self.drug_names:
            raise ValueError("keyword set must be nonempty")
        for name in self.drug_names:
            if name != name.lower() or name != name.strip() or not name:
                raise ValueError(f"keywords must be lowercase and trimmed: {name!r}")


@dataclass(frozen=True)
class TokenizedDoc:
    """A tweet reduced to an ordered list of vocabulary indices."""

    tweet_id: str
    tokens: tuple[int, ...]


@dataclass(frozen=True)
class DocTermStats:
    """Documents-by-terms counts plus the sparsity of that matrix."""

    vocabulary: tuple[str, ...]
    doc_count: int
    term_counts: tuple[dict[int, int], ...]  # per doc: vocab index -> frequency
    sparsity: float
    nonzero_cells: int = field(default=0)


def parse_timestamp(value: str) -> datetime:
    """Parse ISO-8601 or the classic 'Day Mon DD HH:MM:SS +0000 YYYY' form to UTC."""
    try:
        dt = datetime.strptime(value, _CLASSIC_TIME_FORMAT)
    except ValueError:
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ValueError(f"unparseable timestamp: {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _entity_count(entities: dict, key: str, line_number: int, strict: bool) -> int:
    value = entities.get(key)
    if value is None:
        if strict:
            raise SchemaError(line_number, f"entities.{key}", "missing required field")
        return 0
    if isinstance(value, bool):
        raise SchemaError(line_number, f"entities.{key}", "expected list or count")
    if isinstance(value, int):
        count = value
    elif isinstance(value, list):
        count = len(value)
    else:
        raise SchemaError(line_number, f"entities.{key}", "expected list or count")
    if count < 0:
        raise SchemaError(line_number, f"entities.{key}", "negative count")
    return count


def _require(obj: dict, key: str, line_number: int, strict: bool, default=None, label: str | None = None):
    if key in obj and obj[key] is not None:
        return obj[key]
    if strict:
        raise SchemaError(line_number, label or key, "missing required field")
    return default


def _nonneg_int(value, key: str, line_number: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(line_number, key, f"expected integer, got {value!r}")
    if value < 0:
        raise SchemaError(line_number, key, f"negative count {value}")
    return value


def _record_from_object(obj: dict, line_number: int, strict: bool) -> TweetRecord:
    tweet_id = _require(obj, "id_str", line_number, strict=True)
    text = _require(obj, "text", line_number, strict=True)
    created_raw = _require(obj, "created_at", line_number, strict=True)
    try:
        created_at = parse_timestamp(str(created_raw))
    except ValueError as exc:
        raise SchemaError(line_number, "created_at", str(exc)) from exc

    retweeted = obj.get("retweeted_status")
    retweeted_present = bool(retweeted) if not isinstance(retweeted, dict) else True

    entities = obj.get("entities")
    if entities is None:
        if strict:
            raise SchemaError(line_number, "entities", "missing required field")
        entities = {}
    elif not isinstance(entities, dict):
        raise SchemaError(line_number, "entities", "expected object")

    user = obj.get("user")
    if not isinstance(user, dict):
        raise SchemaError(line_number, "user", "missing required field")

    reply = obj.get("in_reply_to_status_id")
    sensitive = obj.get("possibly_sensitive")
    if sensitive is not None and not isinstance(sensitive, bool):
        raise SchemaError(line_number, "possibly_sensitive", "expected boolean")

    matched = obj.get("matched_keywords", [])
    if not isinstance(matched, list):
        raise SchemaError(line_number, "matched_keywords", "expected list")

    try:
        user_created = parse_timestamp(
            str(_require(user, "created_at", line_number, strict=True, label="user.created_at"))
        )
    except SchemaError:
        raise
    except ValueError as exc:
        raise SchemaError(line_number, "user.created_at", str(exc)) from exc

    return TweetRecord(
        tweet_id=str(tweet_id),
        created_at=created_at,
        text=str(text),
        retweeted_status_present=retweeted_present,
        retweet_count=_nonneg_int(
            _require(obj, "retweet_count", line_number, strict, default=0),
            "retweet_count",
            line_number,
        ),
        favorite_count=_nonneg_int(
            _require(obj, "favorite_count", line_number, strict, default=0),
            "favorite_count",
            line_number,
        ),
        in_reply_to_status_id=None if reply is None else str(reply),
        possibly_sensitive=sensitive,
        url_entity_count=_entity_count(entities, "urls", line_number, strict),
        hashtag_entity_count=_entity_count(entities, "hashtags", line_number, strict),
        symbol_entity_count=_entity_count(entities, "symbols", line_number, strict),
        user_id=str(_require(user, "id_str", line_number, strict=True, label="user.id_str")),
        user_verified=bool(
            _require(user, "verified", line_number, strict, default=False, label="user.verified")
        ),
        user_friends_count=_nonneg_int(
            _require(user, "friends_count", line_number, strict, default=0, label="user.friends_count"),
            "user.friends_count",
            line_number,
        ),
        user_followers_count=_nonneg_int(
            _require(user, "followers_count", line_number, strict, default=0, label="user.followers_count"),
            "user.followers_count",
            line_number,
        ),
        user_statuses_count=_nonneg_int(
            _require(user, "statuses_count", line_number, strict, default=0, label="user.statuses_count"),
            "user.statuses_count",
            line_number,
        ),
        user_favourites_count=_nonneg_int(
            _require(user, "favourites_count", line_number, strict, default=0, label="user.favourites_count"),
            "user.favourites_count",
            line_number,
        ),
        user_created_at=user_created,
        matched_keywords=frozenset(str(k) for k in matched),
    )


def ingest_jsonl(path: str | Path, schema_mode: str = "lenient") -> list[TweetRecord]:
    """Read one TweetRecord per JSONL line, preserving input order.

    strict mode errors on any missing required field; lenient mode fills
    documented defaults (entity counts 0, possibly_sensitive absent).
    Duplicate tweet_ids keep the first occurrence in lenient mode and raise
    in strict mode.
    """
    if schema_mode not in ("strict", "lenient"):
        raise ValueError(f"schema_mode must be 'strict' or 'lenient', got {schema_mode!r}")
    strict = schema_mode == "strict"
    records: list[TweetRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_number, "<json>", f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise SchemaError(line_number, "<json>", "each line must be one JSON object")
            record = _record_from_object(obj, line_number, strict)
            if record.tweet_id in seen:
                if strict:
                    raise SchemaError(line_number, "id_str", f"duplicate tweet_id {record.tweet_id}")
                continue
            seen.add(record.tweet_id)
            records.append(record)
    return records


def serialize_jsonl(records: Iterable[TweetRecord], path: str | Path) -> None:
    """Write records in the normalized flat form that ingest_jsonl accepts."""
    with open(path, "w", encoding="utf-8") as handle:
        for r in records:
            obj = {
                "id_str": r.tweet_id,
                "created_at": r.created_at.isoformat(),
                "text": r.text,
                "retweeted_status": r.retweeted_status_present,
                "retweet_count": r.retweet_count,
                "favorite_count": r.favorite_count,
                "in_reply_to_status_id": r.in_reply_to_status_id,
                "possibly_sensitive": r.possibly_sensitive,
                "entities": {
                    "urls": r.url_entity_count,
                    "hashtags": r.hashtag_entity_count,
                    "symbols": r.symbol_entity_count,
                },
                "user": {
                    "id_str": r.user_id,
                    "verified": r.user_verified,
                    "friends_count": r.user_friends_count,
                    "followers_count": r.user_followers_count,
                    "statuses_count": r.user_statuses_count,
                    "favourites_count": r.user_favourites_count,
                    "created_at": r.user_created_at.isoformat(),
                },
                "matched_keywords": sorted(r.matched_keywords),
            }
            handle.write(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def keyword_filter(
    records: Iterable[TweetRecord],
    keywords: KeywordSet | None = None,
    match_mode: str = "token",
) -> list[TweetRecord]:
    """Keep records whose lowercased text contains at least one keyword.

    token mode matches keywords against maximal [a-z0-9] runs; substring
    mode uses plain containment.  matched_keywords is (re)populated on every
    returned record, so the filter is idempotent.
    """
    if match_mode not in ("token", "substring"):
        raise ValueError(f"match_mode must be 'token' or 'substring', got {match_mode!r}")
    keywords = keywords or KeywordSet()
    kept: list[TweetRecord] = []
    for record in records:
        text = record.text.lower()
        if match_mode == "token":
            tokens = set(_WORD_RE.findall(text))
            matched = frozenset(k for k in keywords.drug_names if k in tokens)
        else:
            matched = frozenset(k for k in keywords.drug_names if k in text)
        if matched:
            kept.append(replace(record, matched_keywords=matched))
    return kept


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load the stopword list; defaults to the packaged English list."""
    if path is None:
        data = resources.files("rxwatch.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        data = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in data.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def tokenize(text: str, stopwords: frozenset[str] = frozenset()) -> list[str]:
    """Lowercase and split tweet text into cleaned tokens, order preserved.

    Drops URLs, @-mentions, a leading 'rt' retweet marker, punctuation, and
    stopwords; hashtags survive with '#' stripped.
    """
    raw = text.lower().split()
    if raw and raw[0].strip(".,:;!?") == "rt":
        raw = raw[1:]
    tokens: list[str] = []
    for piece in raw:
        if piece.startswith(("http://", "https://")):
            continue
        if piece.startswith("@"):
            continue
        if piece.startswith("#"):
            piece = piece[1:]
        piece = _PUNCT_STRIP_RE.sub("", piece)
        if not piece or piece in stopwords:
            continue
        tokens.append(piece)
    return tokens


def tokenize_record(record: TweetRecord, stopwords: frozenset[str] = frozenset()) -> list[str]:
    return tokenize(record.text, stopwords)


def index_corpus(
    docs: Iterable[tuple[str, list[str]]],
) -> tuple[list[TokenizedDoc], tuple[str, ...]]:
    """Map token strings to indices over one shared, sorted vocabulary.

    The vocabulary is frozen here in a single pass; every token of every
    document is interned before any index is handed out, so TokenizedDoc
    indices are always in range.
    """
    docs = list(docs)
    vocabulary = tuple(sorted({tok for _, tokens in docs for tok in tokens}))
    lookup = {term: i for i, term in enumerate(vocabulary)}
    tokenized = [
        TokenizedDoc(tweet_id=tweet_id, tokens=tuple(lookup[t] for t in tokens))
        for tweet_id, tokens in docs
    ]
    return tokenized, vocabulary


def tokenize_corpus(
    records: Iterable[TweetRecord], stopwords: frozenset[str] = frozenset()
) -> tuple[list[TokenizedDoc], tuple[str, ...]]:
    """Tokenize every record and index the result over one vocabulary."""
    return index_corpus((r.tweet_id, tokenize(r.text, stopwords)) for r in records)


def build_doc_term(docs: list[TokenizedDoc], vocabulary: tuple[str, ...]) -> DocTermStats:
    """Count per-document term frequencies and the matrix sparsity."""
    if not docs or all(len(d.tokens) == 0 for d in docs):
        raise DegenerateCorpusError("no document contains any token")
    width = len(vocabulary)
    counts: list[dict[int, int]] = []
    nonzero = 0
    for doc in docs:
        row = dict(Counter(doc.tokens))
        for index in row:
            if index >= width:
                raise ValueError(f"token index {index} out of range for vocabulary of {width}")
        nonzero += len(row)
        counts.append(row)
    sparsity = nonzero / (len(docs) * width)
    return DocTermStats(
        vocabulary=vocabulary,
        doc_count=len(docs),
        term_counts=tuple(counts),
        sparsity=sparsity,
        nonzero_cells=nonzero,
    )
