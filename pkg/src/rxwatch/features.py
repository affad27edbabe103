"""Metadata feature extraction and the rogue-vs-regular comparison:
per-class means, Welch t-tests, cross-group ratios, and account-age
fractions.

The 13 features cover four semantic groups: user engagement
(retweeted_status, retweet_count, favorite_count, in_reply_status_id),
tweet content (possibly_sensitive plus the three entity indicators), user
network size (friends/followers), and user profile (statuses, favorites,
verified).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import TweetRecord
from .errors import DegenerateGroupError, UndefinedTestError
from .screening import ClassLabel

FEATURE_NAMES: tuple[str, ...] = (
    "retweeted_status",
    "retweet_count",
    "favorite_count",
    "in_reply_status_id",
    "possibly_sensitive",
    "entities_urls",
    "entities_symbols",
    "entities_hashtags",
    "user_verified",
    "user_friends_count",
    "user_follower_count",
    "user_statuses_count",
    "user_favorites_count",
)

SEMANTIC_GROUPS: dict[str, tuple[str, ...]] = {
    "User Engagement": ("retweeted_status", "retweet_count", "favorite_count", "in_reply_status_id"),
    "Tweet Based": ("possibly_sensitive", "entities_urls", "entities_symbols", "entities_hashtags"),
    "User Network": ("user_friends_count", "user_follower_count"),
    "User Profile": ("user_verified", "user_statuses_count", "user_favorites_count"),
}

DEFAULT_ACCOUNT_AGE_CUTOFF = datetime(2014, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class FeatureVector:
    """The 13 numeric features of one tweet plus its class label."""

    tweet_id: str
    retweeted_status: float
    retweet_count: float
    favorite_count: float
    in_reply_status_id: float
    possibly_sensitive: float
    entities_urls: float
    entities_symbols: float
    entities_hashtags: float
    user_verified: float
    user_friends_count: float
    user_follower_count: float
    user_statuses_count: float
    user_favorites_count: float
    label: ClassLabel | None = None

    def values(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)


@dataclass(frozen=True)
class GroupSummary:
    drug: str
    feature: str
    rogue_mean: float
    nonrogue_mean: float
    rogue_n: int
    nonrogue_n: int


@dataclass(frozen=True)
class TTestResult:
    feature: str
    t_statistic: float
    degrees_of_freedom: float
    p_value: float


def extract_features(
    record: TweetRecord, label: ClassLabel | None = None, entity_mode: str = "binary"
) -> FeatureVector:
    """Map one TweetRecord onto the 13 features.

    Booleans become {0,1}; entity features default to binary presence
    (their observed value ranges are bounded by 1), with a count mode flag;
    count features are copied as reals.
    """
    if entity_mode not in ("binary", "count"):
        raise ValueError(f"entity_mode must be 'binary' or 'count', got {entity_mode!r}")

    def entity(count: int) -> float:
        return float(count) if entity_mode == "count" else (1.0 if count > 0 else 0.0)

    return FeatureVector(
        tweet_id=record.tweet_id,
        retweeted_status=1.0 if record.retweeted_status_present else 0.0,
        retweet_count=float(record.retweet_count),
        favorite_count=float(record.favorite_count),
        in_reply_status_id=1.0 if record.in_reply_to_status_id is not None else 0.0,
        possibly_sensitive=1.0 if record.possibly_sensitive is True else 0.0,
        entities_urls=entity(record.url_entity_count),
        entities_symbols=entity(record.symbol_entity_count),
        entities_hashtags=entity(record.hashtag_entity_count),
        user_verified=1.0 if record.user_verified else 0.0,
        user_friends_count=float(record.user_friends_count),
        user_follower_count=float(record.user_followers_count),
        user_statuses_count=float(record.user_statuses_count),
        user_favorites_count=float(record.user_favourites_count),
        label=label,
    )


def group_means(vectors: Sequence[FeatureVector], drug: str) -> list[GroupSummary]:
    """Arithmetic per-class mean of every feature, one summary per feature."""
    rogue = [v for v in vectors if v.label is ClassLabel.ROGUE]
    nonrogue = [v for v in vectors if v.label is ClassLabel.NONROGUE]
    if not rogue or not nonrogue:
        raise DegenerateGroupError(
            f"both classes required for group means (rogue={len(rogue)}, nonrogue={len(nonrogue)})"
        )
    rogue_matrix = np.stack([v.values() for v in rogue])
    nonrogue_matrix = np.stack([v.values() for v in nonrogue])
    rogue_means = rogue_matrix.mean(axis=0)
    nonrogue_means = nonrogue_matrix.mean(axis=0)
    return [
        GroupSummary(
            drug=drug,
            feature=name,
            rogue_mean=float(rogue_means[i]),
            nonrogue_mean=float(nonrogue_means[i]),
            rogue_n=len(rogue),
            nonrogue_n=len(nonrogue),
        )
        for i, name in enumerate(FEATURE_NAMES)
    ]


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz's continued fraction for the incomplete beta integral."""
    max_iterations = 400
    eps = 1e-15
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        step = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + step * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + step / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        step = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + step * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + step / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to ~1e-14 relative over the t-test range."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """P(|T_df| >= |t|) via the regularized incomplete beta tail identity."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def welch_ttest(
    rogue_values: Sequence[float], nonrogue_values: Sequence[float], feature: str = ""
) -> TTestResult:
    """Welch's unequal-variance t-test with a two-sided p-value.

    t = (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b), with the
    Welch-Satterthwaite degrees of freedom.  Undefined when both sample
    variances are zero.
    """
    a = [float(v) for v in rogue_values]
    b = [float(v) for v in nonrogue_values]
    if len(a) < 2 or len(b) < 2:
        raise UndefinedTestError("each sample needs at least 2 values")
    n_a, n_b = len(a), len(b)
    mean_a = sum(a) / n_a
    mean_b = sum(b) / n_b
    var_a = sum((v - mean_a) ** 2 for v in a) / (n_a - 1)
    var_b = sum((v - mean_b) ** 2 for v in b) / (n_b - 1)
    if not (math.isfinite(var_a) and math.isfinite(var_b)):
        raise UndefinedTestError("samples must have finite variance")
    if var_a == 0.0 and var_b == 0.0:
        raise UndefinedTestError("both sample variances are zero")
    # rescale by the larger spread: t and df are scale-invariant and this
    # keeps the Satterthwaite denominator out of underflow for tiny variances
    scale_sq = max(var_a, var_b)
    se_a = var_a / scale_sq / n_a
    se_b = var_b / scale_sq / n_b
    t = (mean_a - mean_b) / math.sqrt(scale_sq) / math.sqrt(se_a + se_b)
    df = (se_a + se_b) ** 2 / (se_a**2 / (n_a - 1) + se_b**2 / (n_b - 1))
    p = student_t_two_sided_p(t, df)
    return TTestResult(feature=feature, t_statistic=t, degrees_of_freedom=df, p_value=p)


def crossgroup_ratio(summary: GroupSummary, invert: bool = False) -> float | None:
    """nonrogue_mean / rogue_mean (or the inverse) for x-style comparisons.

    Returns None when the denominator mean is zero; callers report that as
    unbounded and exclude it from aggregates.
    """
    numerator, denominator = summary.nonrogue_mean, summary.rogue_mean
    if invert:
        numerator, denominator = denominator, numerator
    if denominator == 0.0:
        return None
    return numerator / denominator


def account_age_fraction(
    records: Sequence[TweetRecord], cutoff: datetime = DEFAULT_ACCOUNT_AGE_CUTOFF
) -> float:
    """Fraction of distinct posting accounts created at or after the cutoff."""
    if cutoff.tzinfo is None:
        cutoff = cutoff.replace(tzinfo=timezone.utc)
    first_seen: dict[str, datetime] = {}
    for record in records:
        first_seen.setdefault(record.user_id, record.user_created_at)
    if not first_seen:
        raise DegenerateGroupError("no users present")
    recent = sum(1 for created in first_seen.values() if created >= cutoff)
    return recent / len(first_seen)


def export_features_csv(
    vectors: Iterable[FeatureVector], path: str | Path, drugs_by_tweet: dict[str, str] | None = None
) -> None:
    """CSV with the Table-order feature header plus tweet_id/label columns."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        header = ["tweet_id", *FEATURE_NAMES, "label"]
        if drugs_by_tweet is not None:
            header.append("drugs")
        writer.writerow(header)
        for v in vectors:
            row = [v.tweet_id]
            row.extend(repr(getattr(v, name)) for name in FEATURE_NAMES)
            row.append(v.label.value if v.label is not None else "")
            if drugs_by_tweet is not None:
                row.append(drugs_by_tweet.get(v.tweet_id, ""))
            writer.writerow(row)


def read_features_csv(path: str | Path) -> tuple[list[FeatureVector], dict[str, str]]:
    vectors: list[FeatureVector] = []
    drugs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            kwargs = {name: float(row[name]) for name in FEATURE_NAMES}
            label = ClassLabel(row["label"]) if row.get("label") else None
            vectors.append(FeatureVector(tweet_id=row["tweet_id"], label=label, **kwargs))
            if "drugs" in row and row["drugs"]:
                drugs[row["tweet_id"]] = row["drugs"]
    return vectors, drugs


def statistics_report(
    summaries: Sequence[GroupSummary],
    tests: dict[str, TTestResult],
    account_age_rogue: float | None,
    drug: str,
) -> str:
    """Aligned text table per drug: feature, class means, t/df/p, ratio.

    Features are presented in their four semantic groups (the named
    groupings cover all 13 features).
    """
    by_feature = {s.feature: s for s in summaries}
    lines = [
        f"drug: {drug}",
        f"{'feature':<22s} {'rogue mean':>14s} {'non-rogue mean':>15s} {'t':>10s} {'df':>9s} {'p':>11s} {'ratio':>9s}",
    ]
    for group, names in SEMANTIC_GROUPS.items():
        lines.append(f"-- {group} --")
        for name in names:
            s = by_feature[name]
            test = tests.get(name)
            ratio = crossgroup_ratio(s)
            ratio_text = "inf" if ratio is None else f"{ratio:.2f}"
            if test is None:
                t_text, df_text, p_text = "n/a", "n/a", "n/a"
            else:
                t_text = f"{test.t_statistic:.4f}"
                df_text = f"{test.degrees_of_freedom:.1f}"
                p_text = f"{test.p_value:.3e}"
            lines.append(
                f"{name:<22s} {s.rogue_mean:>14.4f} {s.nonrogue_mean:>15.4f} "
                f"{t_text:>10s} {df_text:>9s} {p_text:>11s} {ratio_text:>9s}"
            )
    if account_age_rogue is not None:
        lines.append(
            f"rogue accounts created on/after {DEFAULT_ACCOUNT_AGE_CUTOFF.date()}: "
            f"{account_age_rogue:.1%}"
        )
    return "\n".join(lines)
