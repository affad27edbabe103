"""Synthetic tweet streams and feature populations with planted ground
truth, for demos and end-to-end checks.

The generated stream mixes three populations: rogue pharmacy promotion
(sales vocabulary plus an embedded URL, spam-profile metadata), regular
drug chatter (conversational vocabulary, organic metadata), and off-topic
noise that the keyword filter should drop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, FeatureVector
from .screening import ClassLabel

DRUGS = ("percocet", "codeine", "oxycodone", "oxycontin", "hydrocodone", "vicodin", "fentanyl")

SALES_WORDS = (
    "buy", "order", "cheap", "online", "pills", "pharmacy", "discount",
    "prescription", "free", "shipping", "price", "quality", "offer", "super", "best",
)

CASUAL_WORDS = (
    "sleepy", "doctor", "tooth", "pain", "feel", "night", "hate", "dreams",
    "music", "lean", "cup", "slow", "wisdom", "surgery", "tired", "laughing",
)

NOISE_TEXTS = (
    "aspirin and coffee for my headache again",
    "ibuprofen is the only thing that works for me",
    "watching the game tonight with friends",
    "new album dropping friday so excited",
)

# Representative per-feature mean profiles for the two populations,
# matching the magnitude gap seen in real rogue vs. organic drug traffic.
ROGUE_FEATURE_MEANS: dict[str, float] = {
    "retweeted_status": 0.0,
    "retweet_count": 0.3234,
    "favorite_count": 0.0,
    "in_reply_status_id": 0.0,
    "possibly_sensitive": 0.0,
    "entities_urls": 1.0,
    "entities_symbols": 0.0,
    "entities_hashtags": 0.0,
    "user_verified": 0.0,
    "user_friends_count": 12.39,
    "user_follower_count": 28.39,
    "user_statuses_count": 166995.0,
    "user_favorites_count": 0.0,
}

REGULAR_FEATURE_MEANS: dict[str, float] = {
    "retweeted_status": 0.4131,
    "retweet_count": 409.16,
    "favorite_count": 386.82,
    "in_reply_status_id": 0.0658,
    "possibly_sensitive": 0.102,
    "entities_urls": 0.1724,
    "entities_symbols": 0.0009,
    "entities_hashtags": 0.1647,
    "user_verified": 0.0022,
    "user_friends_count": 1123.05,
    "user_follower_count": 2666.85,
    "user_statuses_count": 38823.55,
    "user_favorites_count": 5436.99,
}

_BINARY_FEATURES = frozenset(
    {
        "retweeted_status",
        "in_reply_status_id",
        "possibly_sensitive",
        "entities_urls",
        "entities_symbols",
        "entities_hashtags",
        "user_verified",
    }
)


@dataclass(frozen=True)
class PlantedStream:
    """A generated stream plus its ground truth."""

    path: Path
    rogue_ids: frozenset[str]
    regular_ids: frozenset[str]
    noise_ids: frozenset[str]


def _classic_timestamp(dt: datetime) -> str:
    return dt.strftime("%a %b %d %H:%M:%S +0000 %Y")


def _rogue_text(rng: np.random.Generator, drug: str) -> str:
    words = list(rng.choice(SALES_WORDS, size=5, replace=False))
    host = f"http://rx{rng.integers(100, 999)}.example.com/{drug}"
    return f"{words[0]} {drug} {words[1]} {words[2]} {words[3]} {words[4]} {host}"


def _regular_text(rng: np.random.Generator, drug: str) -> str:
    words = list(rng.choice(CASUAL_WORDS, size=5, replace=False))
    return f"{words[0]} {words[1]} {drug} {words[2]} {words[3]} {words[4]}"


def make_tweet_stream(
    path: str | Path,
    n_rogue: int = 200,
    n_regular: int = 350,
    n_noise: int = 50,
    seed: int = 0,
    drugs: tuple[str, ...] = ("codeine", "oxycodone", "vicodin"),
) -> PlantedStream:
    """Write a raw-schema JSONL stream with planted rogue/regular/noise tweets."""
    rng = np.random.default_rng(seed)
    path = Path(path)
    base_time = datetime(2015, 6, 1, tzinfo=timezone.utc)
    rows: list[tuple[str, dict]] = []

    rogue_ids, regular_ids, noise_ids = [], [], []
    next_id = 800_000_000_000_000

    for i in range(n_rogue):
        tweet_id = str(next_id + i)
        rogue_ids.append(tweet_id)
        drug = drugs[int(rng.integers(0, len(drugs)))]
        created = base_time + timedelta(minutes=int(rng.integers(0, 200_000)))
        user_created = datetime(2014, 1, 1, tzinfo=timezone.utc) + timedelta(
            days=int(rng.integers(0, 500))
        )
        if rng.random() < 0.2:  # a tail of rogue accounts predating the surge
            user_created = datetime(2012, 1, 1, tzinfo=timezone.utc) + timedelta(
                days=int(rng.integers(0, 600))
            )
        obj = {
            "id_str": tweet_id,
            "created_at": _classic_timestamp(created),
            "text": _rogue_text(rng, drug),
            "retweet_count": 0 if rng.random() < 0.9 else 1,
            "favorite_count": 0,
            "in_reply_to_status_id": None,
            "entities": {
                "urls": [{"url": "http://t.co/x"}],
                "hashtags": [],
                "symbols": [],
            },
            "user": {
                "id_str": f"ru{int(rng.integers(0, max(2, n_rogue // 2)))}",
                "verified": False,
                "friends_count": int(rng.integers(2, 40)),
                "followers_count": int(rng.integers(5, 80)),
                "statuses_count": int(rng.integers(120_000, 210_000)),
                "favourites_count": 0,
                "created_at": user_created.isoformat(),
            },
        }
        rows.append((tweet_id, obj))

    for i in range(n_regular):
        tweet_id = str(next_id + n_rogue + i)
        regular_ids.append(tweet_id)
        drug = drugs[int(rng.integers(0, len(drugs)))]
        created = base_time + timedelta(minutes=int(rng.integers(0, 200_000)))
        user_created = datetime(2009, 1, 1, tzinfo=timezone.utc) + timedelta(
            days=int(rng.integers(0, 2400))
        )
        is_retweet = bool(rng.random() < 0.4)
        text = _regular_text(rng, drug)
        if is_retweet:
            text = "RT @someone " + text
        has_hashtag = bool(rng.random() < 0.15)
        if has_hashtag:
            text += f" #{drug}"
        obj = {
            "id_str": tweet_id,
            "created_at": created.isoformat(),
            "text": text,
            "retweet_count": int(rng.integers(0, 900)) if is_retweet else 0,
            "favorite_count": int(rng.integers(0, 800)),
            "in_reply_to_status_id": str(next_id - 1) if rng.random() < 0.07 else None,
            "possibly_sensitive": bool(rng.random() < 0.1),
            "entities": {
                "urls": [{"url": "http://t.co/y"}] if rng.random() < 0.15 else [],
                "hashtags": [{"text": drug}] if has_hashtag else [],
                "symbols": [],
            },
            "user": {
                "id_str": f"gu{i}",
                "verified": bool(rng.random() < 0.003),
                "friends_count": int(rng.integers(50, 3000)),
                "followers_count": int(rng.integers(50, 8000)),
                "statuses_count": int(rng.integers(2000, 70_000)),
                "favourites_count": int(rng.integers(0, 15_000)),
                "created_at": user_created.isoformat(),
            },
        }
        if is_retweet:
            obj["retweeted_status"] = {"id_str": str(next_id - 2)}
        rows.append((tweet_id, obj))

    for i in range(n_noise):
        tweet_id = str(next_id + n_rogue + n_regular + i)
        noise_ids.append(tweet_id)
        created = base_time + timedelta(minutes=int(rng.integers(0, 200_000)))
        obj = {
            "id_str": tweet_id,
            "created_at": created.isoformat(),
            "text": NOISE_TEXTS[int(rng.integers(0, len(NOISE_TEXTS)))],
            "retweet_count": int(rng.integers(0, 30)),
            "favorite_count": int(rng.integers(0, 30)),
            "in_reply_to_status_id": None,
            "entities": {"urls": [], "hashtags": [], "symbols": []},
            "user": {
                "id_str": f"nu{i}",
                "verified": False,
                "friends_count": int(rng.integers(50, 2000)),
                "followers_count": int(rng.integers(50, 2000)),
                "statuses_count": int(rng.integers(100, 40_000)),
                "favourites_count": int(rng.integers(0, 9000)),
                "created_at": datetime(2011, 5, 1, tzinfo=timezone.utc).isoformat(),
            },
        }
        rows.append((tweet_id, obj))

    # interleave populations deterministically so order carries no signal
    order = rng.permutation(len(rows))
    with open(path, "w", encoding="utf-8") as handle:
        for index in order:
            handle.write(json.dumps(rows[index][1], sort_keys=True) + "\n")

    return PlantedStream(
        path=path,
        rogue_ids=frozenset(rogue_ids),
        regular_ids=frozenset(regular_ids),
        noise_ids=frozenset(noise_ids),
    )


def sample_feature_vector(
    rng: np.random.Generator, means: dict[str, float], tweet_id: str, label: ClassLabel
) -> FeatureVector:
    """Draw one feature vector around a mean profile.

    Indicator features are Bernoulli at the profile mean; count features are
    gamma-mixed Poisson draws (negative binomial), which preserves the mean
    exactly while giving realistic overdispersion.
    """
    kwargs: dict[str, float] = {}
    for name in FEATURE_NAMES:
        mean = means[name]
        if name in _BINARY_FEATURES:
            kwargs[name] = 1.0 if rng.random() < min(max(mean, 0.0), 1.0) else 0.0
        elif mean == 0.0:
            kwargs[name] = 0.0
        else:
            kwargs[name] = float(rng.poisson(rng.gamma(2.0, mean / 2.0)))
    return FeatureVector(tweet_id=tweet_id, label=label, **kwargs)


def make_feature_populations(
    n_rogue: int,
    n_regular: int,
    seed: int = 0,
    rogue_means: dict[str, float] | None = None,
    regular_means: dict[str, float] | None = None,
) -> list[FeatureVector]:
    """Two labeled synthetic populations drawn around the mean profiles."""
    rng = np.random.default_rng(seed)
    rogue_means = rogue_means or ROGUE_FEATURE_MEANS
    regular_means = regular_means or REGULAR_FEATURE_MEANS
    vectors = [
        sample_feature_vector(rng, rogue_means, f"r{i}", ClassLabel.ROGUE) for i in range(n_rogue)
    ]
    vectors.extend(
        sample_feature_vector(rng, regular_means, f"g{i}", ClassLabel.NONROGUE)
        for i in range(n_regular)
    )
    return vectors
