"""
Rolling evaluation and feature ablation
=======================================

Train on ten consecutive weeks, predict the next one, slide forward. We do it
for several feature subsets and for the "same as last week" baseline.
Takes a minute or two.
"""

from importlib.resources import files

from appcontest import FeatureConfig, Scenario, generate
from appcontest.evaluation import EvalScheme, ablation_run, comparison_table
from appcontest.features import featurize
from appcontest.ingest import bucket, parse_downloads, parse_microblogs, parse_reviews
from appcontest.model import ForestParams
from appcontest.pipeline import format_table
from appcontest.textmine import ComparativeDictionary, SentimentLexicon

data = files("appcontest") / "data"
scenario = Scenario.from_json(data / "scenarios" / "paper_scale.json")
out = generate(scenario)
windowed = bucket(parse_reviews(out.reviews), parse_microblogs(out.microblogs),
                  parse_downloads(out.downloads), scenario.window_spec())

config = FeatureConfig(SentimentLexicon.from_jsonl(data / "lexicon.jsonl"),
                       ComparativeDictionary.from_jsonl(data / "comparatives.jsonl"),
                       scenario.keywords_A, scenario.keywords_B)
matrix, coarse = featurize(windowed, config)
print(matrix.X.shape[0], "weeks x", matrix.X.shape[1], "columns")
print("first few columns:", matrix.headers[:4])

reports = ablation_run(matrix, ["CF", "FF", "CF+FF", "AF", "MF"], EvalScheme(train_weeks=10),
                       ForestParams(n_trees=50, seed=0))
print(format_table(comparison_table(reports)))
