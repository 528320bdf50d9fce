import json

import numpy as np
import pytest

from appcontest.features import coarse_features, compute_labels
from appcontest.ingest import bucket, parse_downloads, parse_microblogs, parse_reviews
from appcontest.synth import Scenario, generate
from appcontest.textmine import ConfigError


def windowed(out, scenario):
    return bucket(parse_reviews(out.reviews), parse_microblogs(out.microblogs),
                  parse_downloads(out.downloads), scenario.window_spec())


def test_same_seed_same_bytes(tmp_path):
    sc = Scenario(weeks=12, seed=4, review_volume=3, post_volume=3, mention_volume=3)
    a, b = generate(sc), generate(sc)
    assert (a.reviews, a.microblogs, a.downloads) == (b.reviews, b.microblogs, b.downloads)
    assert a.truth == b.truth
    paths = a.write(tmp_path)
    assert sorted(p.name for p in paths.values()) == [
        "downloads.jsonl", "microblogs.jsonl", "reviews.jsonl", "truth.json"]
    c = generate(Scenario(weeks=12, seed=5, review_volume=3, post_volume=3, mention_volume=3))
    assert c.downloads != a.downloads


def test_paper_scale_shape():
    sc = Scenario(weeks=38, review_volume=1, post_volume=1, mention_volume=1)
    out = generate(sc)
    ds = windowed(out, sc)
    assert ds.window_count == 38
    assert ds.skipped_total == 0
    assert len(out.truth["weeks"]) == 38
    labels = compute_labels(ds)
    assert [w["pc"] for w in out.truth["weeks"]] == labels.pc.tolist()


def test_scenario_validation():
    with pytest.raises(ConfigError):
        Scenario(weeks=5)
    with pytest.raises(ConfigError):
        Scenario(sentiment_signal=1.5)
    with pytest.raises(ConfigError):
        Scenario.from_dict({"weeks": 20, "colour": "red"})
    sc = Scenario.from_dict({"weeks": 20, "keywords_A": ["X"]})
    assert Scenario.from_dict(json.loads(json.dumps(sc.to_dict()))) == sc


def cmp_diff(scenario, feature_config):
    c = coarse_features(windowed(generate(scenario), scenario), feature_config, per_window=True)
    return c.column("cmp_score_A")[:, 0] - c.column("cmp_score_B")[:, 0]


def test_null_signal_is_symmetric(feature_config):
    sc = Scenario(weeks=1000, seed=8, sentiment_signal=0, comparison_signal=0,
                  review_volume=0, mention_volume=0, post_volume=2)
    diff = cmp_diff(sc, feature_config)
    se = diff.std(ddof=1) / np.sqrt(len(diff))
    assert abs(diff.mean()) < 3 * se


def test_comparison_signal_is_monotone(feature_config):
    corrs = []
    for signal in (0.0, 0.25, 0.5, 0.75, 1.0):
        sc = Scenario(weeks=200, seed=2, comparison_signal=signal, review_volume=0,
                      mention_volume=0, post_volume=2, volatility=0.5)
        diff = cmp_diff(sc, feature_config)
        pc = np.array([w["pc"] for w in generate(sc).truth["weeks"]])
        corrs.append(np.corrcoef(diff, np.sign(pc))[0, 1])
    assert all(b >= a for a, b in zip(corrs, corrs[1:])), corrs
    assert corrs[-1] > 0.5


def test_intraweek_modes_share_downloads():
    ramp = generate(Scenario(weeks=12, seed=1, intraweek="ramp"))
    step = generate(Scenario(weeks=12, seed=1, intraweek="step"))
    assert ramp.downloads == step.downloads
    assert ramp.reviews != step.reviews
