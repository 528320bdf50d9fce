"""Predict the popularity contest between two rival apps from crowd data."""

from .evaluation import (
    EvalReport,
    EvalScheme,
    ablation_run,
    classification_metrics,
    rmse,
    rolling_evaluate,
)
from .features import (
    A_POSITIVE,
    B_POSITIVE,
    CoarseSeries,
    ContestLabels,
    FeatureConfig,
    FeatureMatrix,
    build_matrix,
    coarse_features,
    compute_labels,
    featurize,
    fine_features,
    hopping_count,
    longest_monotone_runs,
)
from .ingest import (
    WindowSpec,
    WindowedDataset,
    bucket,
    parse_downloads,
    parse_microblogs,
    parse_reviews,
)
from .model import (
    Forest,
    ForestParams,
    TreeParams,
    fit_forest,
    fit_tree,
    last_baseline,
    predict_class,
    predict_value,
)
from .synth import Scenario, generate
from .textmine import (
    ComparativeDictionary,
    SentimentLexicon,
    cosine_similarity,
    count_mentions,
    detect_comparisons,
    score_sentiment,
    sentiment_distribution,
)

__version__ = "0.1.0"
