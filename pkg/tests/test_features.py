import io
import random
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from appcontest.features import (
    A_POSITIVE,
    AF_FEATURES,
    B_POSITIVE,
    MF_FEATURES,
    FeatureConfig,
    build_matrix,
    coarse_features,
    describe,
    featurize,
    fine_features,
    hopping_count,
    labels_from_downloads,
    longest_monotone_runs,
    matrix_csv_text,
    parse_subset,
    read_labels_csv,
    read_matrix_csv,
    subset_label,
    write_labels_csv,
)
from appcontest.ingest import MicroblogRecord, ReviewRecord, bucket
from appcontest.textmine import ConfigError

from _data import ORIGIN, random_records, spec


def windowed(reviews=(), posts=(), downloads=(), weeks=1):
    return bucket(reviews, posts, downloads, spec(weeks))


def coarse_row(ds, config, name):
    c = coarse_features(ds, config)
    return c.values[0, 0, c.names.index(name)]


def test_dn_norm_from_review_totals(feature_config):
    reviews = [ReviewRecord("A", "s", ORIGIN, 5, "")] * 69_228 + \
              [ReviewRecord("B", "s", ORIGIN, 5, "")] * 13_928
    assert coarse_row(windowed(reviews), feature_config, "dn_norm") == \
        pytest.approx(0.66502, abs=1e-5)


def test_empty_sub_window_defaults(feature_config):
    c = coarse_features(windowed(), feature_config)
    row = dict(zip(c.names, c.values[0, 0]))
    assert row["dn_norm"] == 0.0
    assert row["sent_sim"] == 1.0
    assert row["mean_rating_A"] == row["mean_rating_B"] == 3.0
    assert row["r_ba"] == row["r_ab"] == 0.0
    assert c.flags["ratio_zero_denominator"] == 14
    assert c.flags["sentiment_uniform"] == 14


def test_mention_ratio(feature_config):
    posts = [MicroblogRecord("A", ORIGIN, "u", "BlueBike RedBike", 0, 0, 0)] * 30 + \
            [MicroblogRecord("A", ORIGIN, "u", "RedBike", 0, 0, 0)] * 90
    assert coarse_row(windowed(posts=posts), feature_config, "r_ba") == 0.25


def test_comparison_columns(feature_config):
    posts = [MicroblogRecord("Both", ORIGIN, "u1", "RedBike is better than BlueBike", 1, 2, 3),
             MicroblogRecord("Both", ORIGIN, "u1", "RedBike heavier than BlueBike", 1, 0, 0)]
    c = coarse_features(windowed(posts=posts), feature_config)
    row = dict(zip(c.names, c.values[0, 0]))
    assert (row["cmp_count"], row["cmp_score_A"], row["cmp_score_B"]) == (2, 1, 1)
    assert (row["n_posts"], row["n_users"], row["n_reposts"], row["n_likes"]) == (2, 1, 2, 3)


def test_hopping_examples():
    assert hopping_count([1, 1, 1]) == 0
    assert hopping_count([3, 1, 2, 1]) == 2
    assert hopping_count([5, 4, 3]) == 2
    assert hopping_count([]) == hopping_count([9]) == 0


def test_run_examples():
    assert longest_monotone_runs([2, 2, 2, 2]) == (4, 4)
    assert longest_monotone_runs([1, 2, 3, 2, 1]) == (3, 3)
    assert longest_monotone_runs([7]) == (1, 1)
    with pytest.raises(ValueError):
        longest_monotone_runs([])


def test_non_contiguous_runs():
    assert longest_monotone_runs([1, 5, 2, 6, 3, 7], contiguous=False) == (4, 2)
    assert longest_monotone_runs([1, 5, 2, 6, 3, 7]) == (2, 2)


def brute_runs(seq):
    n = len(seq)
    inc = max(j - i for i in range(n) for j in range(i + 1, n + 1)
              if all(seq[k] <= seq[k + 1] for k in range(i, j - 1)))
    dec = max(j - i for i in range(n) for j in range(i + 1, n + 1)
              if all(seq[k] >= seq[k + 1] for k in range(i, j - 1)))
    return inc, dec


def test_runs_and_hops_match_brute_force():
    rng = random.Random(20160620)
    for _ in range(1000):
        seq = [rng.randrange(4) for _ in range(rng.randrange(1, 13))]
        assert longest_monotone_runs(seq) == brute_runs(seq)
        drops = sum(1 for i in range(len(seq) - 1) if seq[i] > seq[i + 1])
        assert hopping_count(seq) == drops


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=12))
def test_hops_forward_and_back(seq):
    total = hopping_count(seq) + hopping_count(seq[::-1])
    assert total <= len(seq) - 1
    if all(a != b for a, b in zip(seq, seq[1:])):
        assert total == len(seq) - 1


def test_describe_examples():
    np.testing.assert_allclose(describe([1, 2, 3, 4, 5]),
                               [3, 1.41421356, 3, 1, 5, 0, 5, 1], atol=1e-6)
    np.testing.assert_array_equal(describe([2.5] * 7), [2.5, 0, 2.5, 2.5, 2.5, 0, 7, 7])
    np.testing.assert_array_equal(describe([4]), [4, 0, 4, 4, 4, 0, 1, 1])


def test_fine_features_use_the_week(feature_config):
    reviews = [ReviewRecord("A", "s", ORIGIN + timedelta(days=d), 5, "great")
               for d in range(7) for _ in range(d + 1)]
    c = coarse_features(windowed(reviews), feature_config)
    fine = fine_features(c, 0)
    n_a = fine[c.names.index("n_reviews_A")]
    np.testing.assert_array_equal(n_a[[0, 3, 4, 5, 6, 7]], [4, 1, 7, 0, 7, 1])


def test_trailing_basis(feature_config):
    reviews = [ReviewRecord("A", "s", ORIGIN + timedelta(days=7 * w), 5, "")
               for w in range(3) for _ in range(3 - w)]
    ds = windowed(reviews, weeks=3)
    c = coarse_features(ds, feature_config, per_window=True)
    fine = fine_features(c, 2, "trailing", trailing_weeks=4)
    assert list(fine[c.names.index("n_reviews_A")]) == [2, pytest.approx(np.std([3, 2, 1])),
                                                      2, 1, 3, 2, 1, 3]


def test_labels_examples():
    lab = labels_from_downloads([35_591_757, 50, 0, 0], [30_423_077, 50, 100, 0])
    assert lab.pc[0] == pytest.approx(0.07830, abs=1e-5)
    assert lab.pc[1] == 0 and lab.ci[1] == 0 and lab.cr[1] == B_POSITIVE
    assert lab.pc[2] == -1 and lab.ci[2] == 1 and lab.cr[2] == B_POSITIVE
    assert lab.cr[0] == A_POSITIVE
    assert list(lab.degenerate) == [False, False, False, True]


@given(st.integers(0, 10**9), st.integers(0, 10**9))
def test_labels_oracle(a, b):
    lab = labels_from_downloads([a], [b])
    expected = 0.0 if a + b == 0 else (a - b) / (a + b)
    assert lab.pc[0] == expected
    assert lab.ci[0] == abs(expected)
    assert lab.cr[0] == (A_POSITIVE if expected > 0 else B_POSITIVE)


def test_subset_parsing():
    assert parse_subset("cf+ff") == {"CF", "FF"}
    assert parse_subset(["AF"]) == {"AF"}
    assert subset_label("MF,FF,AF") == "FF+AF+MF"
    for bad in ("", "XF", []):
        with pytest.raises(ConfigError):
            parse_subset(bad)


@pytest.fixture(scope="module")
def random_matrix(feature_config):
    recs = random_records(random.Random(5), weeks=4)
    return featurize(bucket(*recs, spec(4)), feature_config)[0]


def test_column_counts(random_matrix):
    n = len(AF_FEATURES) + len(MF_FEATURES)
    assert n == 17
    assert random_matrix.project("CF").X.shape == (4, 17)
    assert random_matrix.project("FF").X.shape == (4, 17 * 8)
    assert random_matrix.project("CF,FF").X.shape == (4, 17 * 9)
    assert random_matrix.project("CF,AF").X.shape[1] == len(AF_FEATURES)
    assert list(random_matrix.columns) == sorted(random_matrix.columns)


def test_projection_identity(random_matrix):
    full = random_matrix.project(["CF", "FF", "AF", "MF"])
    assert full.columns == random_matrix.columns
    np.testing.assert_array_equal(full.X, random_matrix.X)


@given(st.sets(st.sampled_from(["CF", "FF", "AF", "MF"]), min_size=1),
       st.sets(st.sampled_from(["CF", "FF", "AF", "MF"]), min_size=1))
def test_projection_composes(random_matrix, a, b):
    # projecting twice keeps the columns both projections keep
    twice = random_matrix.project(a).project(b)
    once_a, once_b = set(random_matrix.project(a).columns), set(random_matrix.project(b).columns)
    assert set(twice.columns) == once_a & once_b


def test_build_matrix_rejects_mismatch(feature_config, random_matrix):
    c = coarse_features(windowed(), feature_config)
    with pytest.raises(ValueError):
        build_matrix(c, np.zeros((2, 17, 8)), random_matrix.labels)


def test_csv_round_trip(random_matrix):
    buf = io.StringIO()
    write_labels_csv(random_matrix.labels, buf, "config_hash=abc")
    buf.seek(0)
    labels = read_labels_csv(buf)
    np.testing.assert_array_equal(labels.pc, random_matrix.labels.pc)
    text = matrix_csv_text(random_matrix, "config_hash=abc")
    assert text.startswith("# config_hash=abc\nwindow,")
    back = read_matrix_csv(io.StringIO(text), labels)
    assert back.columns == random_matrix.columns
    np.testing.assert_array_equal(back.X, random_matrix.X)


def test_strict_paper_adds_magnitudes(lexicon, dictionary):
    cfg = FeatureConfig(lexicon, dictionary, ("RedBike",), ("BlueBike",), strict_paper=True)
    c = coarse_features(windowed(), cfg)
    assert c.names[-2:] == ("dn_abs", "ds_abs")


def test_bad_config(lexicon, dictionary):
    with pytest.raises(ConfigError):
        FeatureConfig(lexicon, dictionary, ("a",), ("b",), fine_basis="hourly")
    with pytest.raises(ConfigError):
        FeatureConfig(lexicon, dictionary, ("a",), ("b",), thresholds=(0.7, 0.2))
