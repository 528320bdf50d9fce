import math

import pytest
from hypothesis import given, strategies as st

from appcontest.textmine import (
    ComparativeDictionary,
    ComparisonResult,
    ConfigError,
    SentimentDistribution,
    SentimentLexicon,
    cosine_similarity,
    count_mentions,
    detect_comparisons,
    score_sentiment,
    sentiment_distribution,
)

LEX = SentimentLexicon({"good": 2.0, "bad": -2.0, "fine": 1.0})
DICT = ComparativeDictionary(frozenset({"sturdier", "better"}), frozenset({"heavier", "worse"}))


def test_no_terms_scores_half():
    assert score_sentiment("nothing here", LEX) == 0.5
    assert score_sentiment("", LEX) == 0.5


def test_single_term_logistic():
    expected = 1 / (1 + math.exp(-2))
    assert score_sentiment("a good ride", LEX) == pytest.approx(0.88079, abs=1e-5)
    assert score_sentiment("a good ride", LEX) == pytest.approx(expected, abs=1e-12)


def test_cancelling_terms():
    assert score_sentiment("good and bad", LEX) == 0.5


def test_distinct_terms_count_once():
    assert score_sentiment("good good good", LEX) == score_sentiment("good", LEX)


def test_case_insensitive_and_token_mode():
    assert score_sentiment("GOOD", LEX) > 0.5
    assert score_sentiment("goodness", LEX) > 0.5
    assert score_sentiment("goodness", LEX, mode="token") == 0.5


def test_lexicon_rejects_duplicates_and_empty():
    with pytest.raises(ConfigError):
        SentimentLexicon({"": 1.0})
    with pytest.raises(ConfigError):
        SentimentLexicon({"Good": 1.0, "good": 2.0})


@given(st.lists(st.sampled_from(["good", "bad", "fine", "meh"]), max_size=6))
def test_adding_positive_term_never_decreases(words):
    base = " ".join(words)
    assert score_sentiment(base + " fine", LEX) >= score_sentiment(base, LEX)


def test_distribution_examples():
    assert sentiment_distribution([0.9, 0.9, 0.1, 0.5]) == SentimentDistribution(0.25, 0.25, 0.5)
    assert sentiment_distribution([]) == SentimentDistribution(1 / 3, 1 / 3, 1 / 3)
    assert sentiment_distribution([0.5] * 4) == SentimentDistribution(0.0, 1.0, 0.0)


def test_distribution_threshold_order():
    with pytest.raises(ConfigError):
        sentiment_distribution([0.5], (0.6, 0.4))
    with pytest.raises(ConfigError):
        sentiment_distribution([0.5], (-0.1, 0.4))


@given(st.lists(st.floats(0, 1), max_size=50))
def test_distribution_is_a_distribution(scores):
    d = sentiment_distribution(scores)
    assert abs(d.p_neg + d.p_neu + d.p_pos - 1) <= 1e-9
    assert all(0 <= p <= 1 for p in (d.p_neg, d.p_neu, d.p_pos))


def test_cosine_examples():
    assert cosine_similarity((1, 0, 0), (1, 0, 0)) == 1.0
    assert cosine_similarity((1, 0, 0), (0, 1, 0)) == 0.0
    assert cosine_similarity((0.2, 0.3, 0.5), (0.5, 0.3, 0.2)) == pytest.approx(0.29 / 0.38, abs=1e-12)
    assert cosine_similarity((0, 0, 0), (1, 0, 0)) == 0.0


vec = st.tuples(*[st.floats(0, 10, allow_subnormal=False)] * 3)


@given(vec, vec, st.floats(0.01, 100))
def test_cosine_properties(u, v, c):
    a = cosine_similarity(u, v)
    assert a == cosine_similarity(v, u)
    assert 0.0 <= a <= 1.0
    if any(u) and any(v):
        scaled = tuple(c * x for x in u)
        assert cosine_similarity(scaled, v) == pytest.approx(a, abs=1e-9)


def test_count_mentions():
    texts = ["RedBike today", "nothing", "redbike and BlueBike"]
    assert count_mentions(texts, ["RedBike", "BlueBike"]) == 2
    assert count_mentions([], ["x"]) == 0
    assert count_mentions(["RedBike BlueBike RedBike"], ["RedBike", "BlueBike"]) == 1


def test_comparisons_examples():
    assert detect_comparisons("RedBike rides", DICT, ["RedBike"], ["BlueBike"]) == ComparisonResult()
    assert detect_comparisons("RedBike sturdier than BlueBike", DICT, ["RedBike"], ["BlueBike"]) \
        == ComparisonResult(1, 1, 0)
    assert detect_comparisons("RedBike heavier than BlueBike", DICT, ["RedBike"], ["BlueBike"]) \
        == ComparisonResult(1, 0, 1)


def test_comparison_subject_is_nearest_preceding_keyword():
    text = "RedBike is fine but BlueBike is better, and RedBike worse"
    # "better" follows BlueBike -> B; "worse" follows RedBike -> credits B
    assert detect_comparisons(text, DICT, ["RedBike"], ["BlueBike"]) == ComparisonResult(2, 0, 2)


def test_unattributed_hits_only_count():
    res = detect_comparisons("better than anything", DICT, ["RedBike"], ["BlueBike"])
    assert res == ComparisonResult(1, 0, 0)


def test_comparisons_count_every_occurrence():
    res = detect_comparisons("RedBike better, better, better", DICT, ["RedBike"], ["BlueBike"])
    assert res == ComparisonResult(3, 3, 0)


def test_tie_goes_to_A():
    # both keyword lists contain "bike", so both end at the same place
    res = detect_comparisons("bike better", DICT, ["bike"], ["bike"])
    assert res == ComparisonResult(1, 1, 0)


def test_dictionary_polarities_disjoint():
    with pytest.raises(ConfigError):
        ComparativeDictionary(frozenset({"better"}), frozenset({"Better"}))


words = st.sampled_from(["RedBike", "BlueBike", "better", "worse", "sturdier", "heavier",
                         "is", "than", "ok"])
sentences = st.lists(words, max_size=12).map(" ".join)


@given(sentences, sentences)
def test_concatenation_adds_counts(a, b):
    args = (DICT, ["RedBike"], ["BlueBike"])
    whole = detect_comparisons(a + " | " + b, *args)
    assert whole.count == detect_comparisons(a, *args).count + detect_comparisons(b, *args).count
    assert whole.score_A + whole.score_B <= whole.count
