import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rxwatch.errors import DegenerateGroupError, UndefinedTestError
from rxwatch.features import (
    FEATURE_NAMES,
    SEMANTIC_GROUPS,
    FeatureVector,
    GroupSummary,
    account_age_fraction,
    crossgroup_ratio,
    export_features_csv,
    extract_features,
    group_means,
    read_features_csv,
    regularized_incomplete_beta,
    statistics_report,
    student_t_two_sided_p,
    welch_ttest,
)
from rxwatch.screening import ClassLabel
from rxwatch.synth import ROGUE_FEATURE_MEANS, make_feature_populations

from conftest import make_record
from welch_fixtures import FIXTURES


# --- extraction ----------------------------------------------------------


def test_extract_direct_mapping():
    record = make_record(urls=1, verified=False, retweet_count=0)
    vector = extract_features(record)
    assert vector.entities_urls == 1.0
    assert vector.user_verified == 0.0
    assert vector.retweet_count == 0.0


def test_extract_rogue_profile_record():
    # a record shaped like the rogue population: URL embedded, no engagement
    record = make_record(
        text="buy codeine online http://x.example", urls=1, favorite_count=0, friends=12,
        statuses=167_000,
    )
    vector = extract_features(record)
    assert vector.entities_urls == 1.0
    assert vector.favorite_count == 0.0
    assert vector.user_friends_count == 12.0
    assert vector.user_statuses_count == 167000.0


def test_extract_binary_vs_count_entity_mode():
    record = make_record(urls=3, hashtags=2)
    binary = extract_features(record)
    counted = extract_features(record, entity_mode="count")
    assert binary.entities_urls == 1.0 and binary.entities_hashtags == 1.0
    assert counted.entities_urls == 3.0 and counted.entities_hashtags == 2.0


def test_extract_presence_semantics():
    record = make_record(in_reply="123", possibly_sensitive=None, retweeted=True)
    vector = extract_features(record)
    assert vector.in_reply_status_id == 1.0
    assert vector.possibly_sensitive == 0.0  # absent counts as 0
    assert vector.retweeted_status == 1.0
    assert extract_features(make_record(possibly_sensitive=True)).possibly_sensitive == 1.0
    assert extract_features(make_record(possibly_sensitive=False)).possibly_sensitive == 0.0


def test_extract_matches_reference_script_on_30_records():
    rng = np.random.default_rng(3)
    records = []
    for i in range(30):
        records.append(
            make_record(
                tweet_id=f"t{i}",
                retweeted=bool(rng.integers(0, 2)),
                retweet_count=int(rng.integers(0, 50)),
                favorite_count=int(rng.integers(0, 50)),
                in_reply=None if rng.random() < 0.5 else "x",
                possibly_sensitive=[None, True, False][int(rng.integers(0, 3))],
                urls=int(rng.integers(0, 3)),
                hashtags=int(rng.integers(0, 3)),
                symbols=int(rng.integers(0, 2)),
                verified=bool(rng.random() < 0.1),
                friends=int(rng.integers(0, 2000)),
                followers=int(rng.integers(0, 2000)),
                statuses=int(rng.integers(0, 100_000)),
                favourites=int(rng.integers(0, 9000)),
            )
        )
    # independent scripted extraction of the same contract
    def reference(r):
        return [
            1.0 if r.retweeted_status_present else 0.0,
            float(r.retweet_count),
            float(r.favorite_count),
            0.0 if r.in_reply_to_status_id is None else 1.0,
            1.0 if r.possibly_sensitive is True else 0.0,
            min(1.0, float(r.url_entity_count)) if r.url_entity_count >= 0 else 0.0,
            min(1.0, float(r.symbol_entity_count)),
            min(1.0, float(r.hashtag_entity_count)),
            1.0 if r.user_verified else 0.0,
            float(r.user_friends_count),
            float(r.user_followers_count),
            float(r.user_statuses_count),
            float(r.user_favourites_count),
        ]

    for record in records:
        assert extract_features(record).values().tolist() == reference(record)


def test_feature_vector_order_matches_names():
    vector = extract_features(make_record())
    values = vector.values()
    assert len(values) == 13
    assert tuple(FEATURE_NAMES[:3]) == ("retweeted_status", "retweet_count", "favorite_count")
    assert set(name for names in SEMANTIC_GROUPS.values() for name in names) == set(FEATURE_NAMES)


# --- group means ---------------------------------------------------------


def _vec(label, **overrides):
    base = {name: 0.0 for name in FEATURE_NAMES}
    base.update(overrides)
    return FeatureVector(tweet_id=overrides.get("tweet_id", "t"), label=label, **base)


def test_group_means_identical_vectors():
    vectors = [
        _vec(ClassLabel.ROGUE, user_friends_count=12.0),
        _vec(ClassLabel.ROGUE, user_friends_count=12.0),
        _vec(ClassLabel.NONROGUE, user_friends_count=1000.0),
    ]
    summaries = {s.feature: s for s in group_means(vectors, "codeine")}
    assert summaries["user_friends_count"].rogue_mean == 12.0
    assert summaries["user_friends_count"].nonrogue_mean == 1000.0
    assert summaries["user_friends_count"].rogue_n == 2


def test_group_means_zero_one_gives_half():
    vectors = [
        _vec(ClassLabel.ROGUE, entities_urls=0.0),
        _vec(ClassLabel.ROGUE, entities_urls=1.0),
        _vec(ClassLabel.NONROGUE),
    ]
    summaries = {s.feature: s for s in group_means(vectors, "codeine")}
    assert summaries["entities_urls"].rogue_mean == 0.5


def test_group_means_empty_class_raises():
    with pytest.raises(DegenerateGroupError):
        group_means([_vec(ClassLabel.ROGUE)], "codeine")


def test_group_means_recover_generator_means_within_3se():
    n = 4000
    vectors = make_feature_populations(n_rogue=n, n_regular=n, seed=123)
    summaries = {s.feature: s for s in group_means(vectors, "codeine")}
    rogue_matrix = np.stack([v.values() for v in vectors if v.label is ClassLabel.ROGUE])
    for i, name in enumerate(FEATURE_NAMES):
        target = ROGUE_FEATURE_MEANS[name]
        se = rogue_matrix[:, i].std(ddof=1) / math.sqrt(n)
        if se == 0.0:
            assert summaries[name].rogue_mean == target
        else:
            assert abs(summaries[name].rogue_mean - target) <= 3 * se + 0.5 / n


def test_group_means_permutation_invariant():
    rng = np.random.default_rng(1)
    vectors = make_feature_populations(40, 40, seed=9)
    shuffled = [vectors[i] for i in rng.permutation(len(vectors))]
    a = group_means(vectors, "d")
    b = group_means(shuffled, "d")
    for s1, s2 in zip(a, b):
        assert s1.rogue_mean == pytest.approx(s2.rogue_mean, abs=1e-12)
        assert s1.nonrogue_mean == pytest.approx(s2.nonrogue_mean, abs=1e-12)


# --- Welch t-test --------------------------------------------------------


def test_welch_identical_lists_t_zero_p_one():
    result = welch_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert result.t_statistic == 0.0
    assert result.p_value == 1.0


def test_welch_zero_variances_undefined():
    with pytest.raises(UndefinedTestError):
        welch_ttest([0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0])


def test_welch_requires_two_values():
    with pytest.raises(UndefinedTestError):
        welch_ttest([1.0], [1.0, 2.0])


def test_welch_matches_pinned_oracle_20_fixtures():
    for name, a, b, t, df, p in FIXTURES:
        result = welch_ttest(a, b, feature=name)
        assert result.t_statistic == pytest.approx(t, abs=1e-6), name
        assert result.degrees_of_freedom == pytest.approx(df, abs=1e-6), name
        assert result.p_value == pytest.approx(p, abs=1e-6), name


def test_welch_antisymmetric():
    a = [1.0, 4.0, 2.0, 8.0]
    b = [0.5, 0.25, 9.0]
    fwd = welch_ttest(a, b)
    rev = welch_ttest(b, a)
    assert fwd.t_statistic == pytest.approx(-rev.t_statistic, abs=1e-12)
    assert fwd.p_value == pytest.approx(rev.p_value, abs=1e-12)
    assert fwd.degrees_of_freedom == pytest.approx(rev.degrees_of_freedom, abs=1e-12)


# values on a coarse grid: a shift must never absorb a sample's variance
# into float rounding, or the shifted test becomes legitimately undefined
_grid_floats = st.floats(-100, 100).map(lambda v: round(v, 3))


@given(
    st.lists(_grid_floats, min_size=2, max_size=25),
    st.lists(_grid_floats, min_size=2, max_size=25),
    st.floats(0.01, 50),
    st.floats(-1000, 1000),
)
@settings(max_examples=100, deadline=None)
def test_welch_affine_invariance_property(a, b, scale, shift):
    try:
        base = welch_ttest(a, b)
    except UndefinedTestError:
        return
    scaled = welch_ttest([scale * x + shift for x in a], [scale * x + shift for x in b])
    assert scaled.t_statistic == pytest.approx(base.t_statistic, rel=1e-6, abs=1e-9)
    assert scaled.p_value == pytest.approx(base.p_value, rel=1e-6, abs=1e-9)


def test_incomplete_beta_reference_values():
    # I_x(a,b) spot checks against closed forms: I_x(1,1) = x, I_x(1,b) = 1-(1-x)^b
    assert regularized_incomplete_beta(1, 1, 0.3) == pytest.approx(0.3, rel=1e-12)
    assert regularized_incomplete_beta(1, 4, 0.2) == pytest.approx(1 - 0.8**4, rel=1e-12)
    assert regularized_incomplete_beta(2.5, 0.5, 0.0) == 0.0
    assert regularized_incomplete_beta(2.5, 0.5, 1.0) == 1.0


def test_student_t_tail_known_values():
    # with df=1 (Cauchy): P(|T| >= 1) = 0.5
    assert student_t_two_sided_p(1.0, 1.0) == pytest.approx(0.5, rel=1e-10)
    # large-df limit approaches the normal tail
    assert student_t_two_sided_p(1.959963984540054, 1e7) == pytest.approx(0.05, rel=1e-4)


# --- ratios --------------------------------------------------------------


def test_ratio_107x():
    summary = GroupSummary("codeine", "user_friends_count", rogue_mean=10.0, nonrogue_mean=1070.0, rogue_n=5, nonrogue_n=5)
    assert crossgroup_ratio(summary) == pytest.approx(107.0)


def test_ratio_equal_means_is_one():
    summary = GroupSummary("d", "f", rogue_mean=3.0, nonrogue_mean=3.0, rogue_n=2, nonrogue_n=2)
    assert crossgroup_ratio(summary) == 1.0


def test_ratio_zero_denominator_marker():
    summary = GroupSummary("d", "f", rogue_mean=0.0, nonrogue_mean=5.0, rogue_n=2, nonrogue_n=2)
    assert crossgroup_ratio(summary) is None
    assert crossgroup_ratio(summary, invert=True) == 0.0


# --- account age ---------------------------------------------------------


def _record_with_user(user_id, year):
    return make_record(
        tweet_id=f"t-{user_id}-{year}",
        user_id=user_id,
        user_created_at=datetime(year, 6, 1, tzinfo=timezone.utc),
    )


def test_account_age_all_recent():
    records = [_record_with_user(f"u{i}", 2015) for i in range(5)]
    assert account_age_fraction(records) == 1.0


def test_account_age_all_old():
    records = [_record_with_user(f"u{i}", 2010) for i in range(5)]
    assert account_age_fraction(records) == 0.0


def test_account_age_seven_of_ten():
    records = [_record_with_user(f"u{i}", 2015 if i < 7 else 2012) for i in range(10)]
    assert account_age_fraction(records) == pytest.approx(0.7)


def test_account_age_dedupes_users():
    records = [_record_with_user("u1", 2015)] * 3 + [_record_with_user("u2", 2010)]
    assert account_age_fraction(records) == pytest.approx(0.5)


def test_account_age_empty_raises():
    with pytest.raises(DegenerateGroupError):
        account_age_fraction([])


# --- export / report -----------------------------------------------------


def test_features_csv_round_trip(tmp_path):
    vectors = make_feature_populations(5, 5, seed=2)
    path = tmp_path / "features.csv"
    export_features_csv(vectors, path, {"r0": "codeine", "g0": "codeine;vicodin"})
    header = path.read_text().splitlines()[0]
    assert header == "tweet_id," + ",".join(FEATURE_NAMES) + ",label,drugs"
    loaded, drugs = read_features_csv(path)
    assert loaded == vectors
    assert drugs == {"r0": "codeine", "g0": "codeine;vicodin"}


def test_statistics_report_contains_groups_and_ratio(tmp_path):
    vectors = make_feature_populations(30, 30, seed=4)
    summaries = group_means(vectors, "codeine")
    tests = {}
    for s in summaries:
        rogue = [getattr(v, s.feature) for v in vectors if v.label is ClassLabel.ROGUE]
        non = [getattr(v, s.feature) for v in vectors if v.label is ClassLabel.NONROGUE]
        try:
            tests[s.feature] = welch_ttest(rogue, non, feature=s.feature)
        except UndefinedTestError:
            pass
    text = statistics_report(summaries, tests, account_age_rogue=0.82, drug="codeine")
    for group in SEMANTIC_GROUPS:
        assert group in text
    assert "codeine" in text
    assert "82" in text  # the account-age percentage
