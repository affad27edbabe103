import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from rxwatch.corpus import TweetRecord


def make_record(
    tweet_id: str = "t1",
    text: str = "codeine dreams",
    *,
    created_at: datetime | None = None,
    retweeted: bool = False,
    retweet_count: int = 0,
    favorite_count: int = 0,
    in_reply: str | None = None,
    possibly_sensitive: bool | None = None,
    urls: int = 0,
    hashtags: int = 0,
    symbols: int = 0,
    user_id: str = "u1",
    verified: bool = False,
    friends: int = 100,
    followers: int = 100,
    statuses: int = 1000,
    favourites: int = 10,
    user_created_at: datetime | None = None,
) -> TweetRecord:
    return TweetRecord(
        tweet_id=tweet_id,
        created_at=created_at or datetime(2015, 7, 1, 12, 0, tzinfo=timezone.utc),
        text=text,
        retweeted_status_present=retweeted,
        retweet_count=retweet_count,
        favorite_count=favorite_count,
        in_reply_to_status_id=in_reply,
        possibly_sensitive=possibly_sensitive,
        url_entity_count=urls,
        hashtag_entity_count=hashtags,
        symbol_entity_count=symbols,
        user_id=user_id,
        user_verified=verified,
        user_friends_count=friends,
        user_followers_count=followers,
        user_statuses_count=statuses,
        user_favourites_count=favourites,
        user_created_at=user_created_at or datetime(2014, 3, 1, tzinfo=timezone.utc),
    )


@pytest.fixture
def raw_tweet_obj() -> dict:
    return {
        "id_str": "624000000000000001",
        "created_at": "Wed Jun 17 10:22:01 +0000 2015",
        "text": "Buy codeine online http://rx.example.com",
        "retweeted_status": None,
        "retweet_count": 0,
        "favorite_count": 0,
        "in_reply_to_status_id": None,
        "possibly_sensitive": False,
        "entities": {"urls": [{"url": "http://rx.example.com"}], "hashtags": [], "symbols": []},
        "user": {
            "id_str": "3301",
            "verified": False,
            "friends_count": 12,
            "followers_count": 28,
            "statuses_count": 166000,
            "favourites_count": 0,
            "created_at": "Sat Feb 14 09:00:00 +0000 2015",
        },
    }


def write_jsonl(path: Path, objects: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as handle:
        for obj in objects:
            handle.write(json.dumps(obj) + "\n")
    return path
