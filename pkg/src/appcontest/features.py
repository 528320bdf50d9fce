"""Coarse- and fine-grained competitive features, contest labels, matrices.

Coarse features are computed per (window, sub-window) cell. Fine features
describe the trajectory of each coarse feature inside a window (or, with the
``trailing`` basis, over the last few weekly values). Columns carry two tags:
granularity (``CF`` coarse / ``FF`` fine) and data source (``AF`` app store /
``MF`` microblogs).
"""

from __future__ import annotations

import bisect
import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .ingest import WindowedDataset
from .textmine import (
    ComparativeDictionary,
    ComparisonDetector,
    ComparisonResult,
    ConfigError,
    SentimentLexicon,
    cosine_similarity,
    count_mentions,
    score_sentiment,
    sentiment_distribution,
)

AF_FEATURES = ("n_reviews_A", "n_reviews_B", "dn_norm", "mean_rating_A", "mean_rating_B",
               "ds", "sent_sim")
MF_FEATURES = ("n_posts", "n_users", "n_reposts", "n_comments", "n_likes", "r_ba", "r_ab",
               "cmp_count", "cmp_score_A", "cmp_score_B")
STRICT_PAPER_FEATURES = ("dn_abs", "ds_abs")
DESCRIPTORS = ("mean", "std", "median", "min", "max", "hop", "inc_run", "dec_run")
TAGS = frozenset({"CF", "FF", "AF", "MF"})

A_POSITIVE = 1
B_POSITIVE = 0
CLASS_NAMES = {A_POSITIVE: "APositive", B_POSITIVE: "BPositive"}

MISSING_RATING = 3.0


@dataclass(frozen=True)
class FeatureConfig:
    lexicon: SentimentLexicon
    dictionary: ComparativeDictionary
    keywords_A: tuple[str, ...]
    keywords_B: tuple[str, ...]
    thresholds: tuple[float, float] = (0.4, 0.6)
    match_mode: str = "substring"
    fine_basis: str = "daily"  # or "trailing"
    trailing_weeks: int = 4
    contiguous_runs: bool = True
    strict_paper: bool = False

    def __post_init__(self) -> None:
        if self.fine_basis not in ("daily", "trailing"):
            raise ConfigError(f"fine_basis must be daily or trailing, got {self.fine_basis!r}")
        if self.trailing_weeks < 1:
            raise ConfigError("trailing_weeks must be >= 1")
        sentiment_distribution([], self.thresholds)


@dataclass
class CoarseSeries:
    """Coarse feature values, shape ``(windows, sub_windows, features)``."""

    names: tuple[str, ...]
    values: np.ndarray
    flags: Counter = field(default_factory=Counter)

    def source(self, name: str) -> str:
        return "MF" if name in MF_FEATURES else "AF"

    def column(self, name: str) -> np.ndarray:
        return self.values[:, :, self.names.index(name)]


def _mean_rating(reviews) -> float | None:
    ratings = [r.rating for r in reviews if r.rating is not None]
    if not ratings:
        return None
    return sum(ratings) / len(ratings)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def coarse_features(windowed: WindowedDataset, config: FeatureConfig,
                    per_window: bool = False) -> CoarseSeries:
    """Compute every coarse feature for every cell.

    With ``per_window`` the sub-windows of each window are merged, giving a
    series with one value per window.
    """
    names = AF_FEATURES + MF_FEATURES + (STRICT_PAPER_FEATURES if config.strict_paper else ())
    T = windowed.window_count
    S = 1 if per_window else windowed.spec.sub_windows
    values = np.zeros((T, S, len(names)))
    flags: Counter = Counter()
    detector = ComparisonDetector(config.dictionary, config.keywords_A, config.keywords_B,
                                  config.match_mode)
    mode = config.match_mode
    sentiment_cache: dict[str, float] = {}

    def scores(reviews) -> list[float]:
        out = []
        for r in reviews:
            if r.text not in sentiment_cache:
                sentiment_cache[r.text] = score_sentiment(r.text, config.lexicon, mode)
            out.append(sentiment_cache[r.text])
        return out

    def cell(groups: dict, key: str, w: int, s: int) -> list:
        window = groups[key][w]
        if per_window:
            return [rec for sub in window for rec in sub]
        return window[s]

    for w in range(T):
        for s in range(S):
            rev_A = cell(windowed.reviews, "A", w, s)
            rev_B = cell(windowed.reviews, "B", w, s)
            both = cell(windowed.microblogs, "Both", w, s)
            posts_A = [p.text for p in cell(windowed.microblogs, "A", w, s)]
            posts_B = [p.text for p in cell(windowed.microblogs, "B", w, s)]

            n_A, n_B = len(rev_A), len(rev_B)
            dn = (n_A - n_B) / (n_A + n_B) if n_A + n_B else 0.0
            mean_A, mean_B = _mean_rating(rev_A), _mean_rating(rev_B)
            if mean_A is None:
                flags["rating_imputed"] += 1
                mean_A = MISSING_RATING
            if mean_B is None:
                flags["rating_imputed"] += 1
                mean_B = MISSING_RATING
            if not rev_A or not rev_B:
                flags["sentiment_uniform"] += (not rev_A) + (not rev_B)
            sim = cosine_similarity(sentiment_distribution(scores(rev_A), config.thresholds),
                                    sentiment_distribution(scores(rev_B), config.thresholds))

            r_ba = _ratio(count_mentions(posts_A, config.keywords_B, mode),
                          count_mentions(posts_A, config.keywords_A, mode))
            r_ab = _ratio(count_mentions(posts_B, config.keywords_A, mode),
                          count_mentions(posts_B, config.keywords_B, mode))
            if r_ba is None:
                flags["ratio_zero_denominator"] += 1
                r_ba = 0.0
            if r_ab is None:
                flags["ratio_zero_denominator"] += 1
                r_ab = 0.0

            cmp = ComparisonResult()
            for post in both:
                cmp = cmp + detector(post.text)

            row = {
                "n_reviews_A": n_A, "n_reviews_B": n_B, "dn_norm": dn,
                "mean_rating_A": mean_A, "mean_rating_B": mean_B, "ds": mean_A - mean_B,
                "sent_sim": sim,
                "n_posts": len(both), "n_users": len({p.user_id for p in both}),
                "n_reposts": sum(p.reposts for p in both),
                "n_comments": sum(p.comments for p in both),
                "n_likes": sum(p.likes for p in both),
                "r_ba": r_ba, "r_ab": r_ab,
                "cmp_count": cmp.count, "cmp_score_A": cmp.score_A, "cmp_score_B": cmp.score_B,
                "dn_abs": abs(dn), "ds_abs": abs(mean_A - mean_B),
            }
            values[w, s] = [row[name] for name in names]
    return CoarseSeries(names, values, flags)


def hopping_count(seq: Sequence[float]) -> int:
    """Number of positions whose value is strictly greater than the next one."""
    return sum(1 for a, b in zip(seq, seq[1:]) if a > b)


def _longest_run(seq: Sequence[float], ok) -> int:
    best = cur = 1
    for a, b in zip(seq, seq[1:]):
        cur = cur + 1 if ok(a, b) else 1
        best = max(best, cur)
    return best


def _longest_subsequence(seq: Sequence[float]) -> int:
    # patience sorting; bisect_right keeps equal values, i.e. non-strict
    tails: list[float] = []
    for x in seq:
        i = bisect.bisect_right(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


def longest_monotone_runs(seq: Sequence[float], contiguous: bool = True) -> tuple[int, int]:
    """Lengths of the longest non-strictly increasing and decreasing stretches.

    ``contiguous=False`` measures non-contiguous subsequences instead.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("longest_monotone_runs needs a non-empty sequence")
    if contiguous:
        return (_longest_run(seq, lambda a, b: a <= b),
                _longest_run(seq, lambda a, b: a >= b))
    return _longest_subsequence(seq), _longest_subsequence([-x for x in seq])


def describe(seq: Sequence[float], contiguous: bool = True) -> np.ndarray:
    """The eight fine descriptors of one sub-series, in ``DESCRIPTORS`` order."""
    arr = np.asarray(seq, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot describe an empty series")
    inc, dec = longest_monotone_runs(arr.tolist(), contiguous)
    return np.array([arr.mean(), arr.std(), np.median(arr), arr.min(), arr.max(),
                     hopping_count(arr.tolist()), inc, dec], dtype=float)


def fine_features(coarse: CoarseSeries, w: int, basis: str = "daily",
                  trailing_weeks: int = 4, contiguous: bool = True) -> np.ndarray:
    """Fine descriptors for window ``w``, shape ``(features, 8)``.

    ``daily`` uses the window's own sub-window values. ``trailing`` expects a
    per-window series and uses the last ``trailing_weeks`` weekly values
    (fewer at the start of the series).
    """
    if basis == "daily":
        sub = coarse.values[w]
    elif basis == "trailing":
        sub = coarse.values[max(0, w - trailing_weeks + 1): w + 1, -1]
    else:
        raise ConfigError(f"unknown fine basis {basis!r}")
    return np.stack([describe(sub[:, f], contiguous) for f in range(len(coarse.names))])


@dataclass
class ContestLabels:
    d_A: np.ndarray
    d_B: np.ndarray
    pc: np.ndarray
    cr: np.ndarray
    ci: np.ndarray
    degenerate: np.ndarray

    def __len__(self) -> int:
        return len(self.pc)

    def take(self, rows) -> "ContestLabels":
        return ContestLabels(self.d_A[rows], self.d_B[rows], self.pc[rows], self.cr[rows],
                             self.ci[rows], self.degenerate[rows])


def labels_from_downloads(d_A: Sequence[int], d_B: Sequence[int]) -> ContestLabels:
    d_A = np.asarray(d_A, dtype=np.int64)
    d_B = np.asarray(d_B, dtype=np.int64)
    total = d_A + d_B
    degenerate = total == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        pc = np.where(degenerate, 0.0, (d_A - d_B) / np.where(degenerate, 1, total))
    pc = pc.astype(float)
    cr = np.where(pc > 0, A_POSITIVE, B_POSITIVE).astype(np.int64)
    return ContestLabels(d_A, d_B, pc, cr, np.abs(pc), degenerate)


def compute_labels(windowed: WindowedDataset) -> ContestLabels:
    """Popularity contest ``(d_A - d_B) / (d_A + d_B)`` of every window.

    Windows without downloads get ``pc = 0`` (hence BPositive) and are
    flagged in ``degenerate``.
    """
    return labels_from_downloads(windowed.window_downloads("A"), windowed.window_downloads("B"))


def parse_subset(tags: str | Iterable[str]) -> frozenset[str]:
    if isinstance(tags, str):
        tags = [t.strip() for t in tags.replace("+", ",").split(",") if t.strip()]
    subset = frozenset(t.upper() for t in tags)
    if not subset:
        raise ConfigError("feature subset must not be empty")
    unknown = subset - TAGS
    if unknown:
        raise ConfigError(f"unknown feature subset tags {sorted(unknown)}")
    return subset


def subset_label(subset: Iterable[str]) -> str:
    subset = parse_subset(subset)
    order = ["CF", "FF", "AF", "MF"]
    return "+".join(t for t in order if t in subset)


def _selects(subset: frozenset[str], granularity: str, source: str) -> bool:
    grains = subset & {"CF", "FF"} or {"CF", "FF"}
    sources = subset & {"AF", "MF"} or {"AF", "MF"}
    return granularity in grains and source in sources


@dataclass
class FeatureMatrix:
    """One row per window. Columns are sorted by name.

    Coarse columns are named after the feature (``ds``); fine columns append
    the descriptor (``ds__median``).
    """

    columns: tuple[str, ...]
    granularity: tuple[str, ...]
    source: tuple[str, ...]
    X: np.ndarray
    labels: ContestLabels

    @property
    def n_windows(self) -> int:
        return self.X.shape[0]

    @property
    def headers(self) -> list[str]:
        return [f"{c}|{g}|{s}" for c, g, s in zip(self.columns, self.granularity, self.source)]

    def project(self, subset: str | Iterable[str]) -> "FeatureMatrix":
        subset = parse_subset(subset)
        keep = [i for i, (g, s) in enumerate(zip(self.granularity, self.source))
                if _selects(subset, g, s)]
        return FeatureMatrix(tuple(self.columns[i] for i in keep),
                             tuple(self.granularity[i] for i in keep),
                             tuple(self.source[i] for i in keep),
                             self.X[:, keep], self.labels)

    def to_csv(self, fh: TextIO, comment: str | None = None) -> None:
        if comment:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window"] + self.headers)
        for w, row in enumerate(self.X):
            writer.writerow([w] + [repr(float(v)) for v in row])


def build_matrix(coarse: CoarseSeries, fine: np.ndarray, labels: ContestLabels,
                 subset: str | Iterable[str] = ("CF", "FF")) -> FeatureMatrix:
    """Assemble model rows from coarse values and per-window fine descriptors.

    ``fine`` has shape ``(windows, features, 8)``.
    """
    subset = parse_subset(subset)
    T = coarse.values.shape[0]
    if fine.shape[0] != T or len(labels) != T:
        raise ValueError("coarse, fine and labels disagree on the window count")
    cols: list[tuple[str, str, str, np.ndarray]] = []
    for f, name in enumerate(coarse.names):
        src = coarse.source(name)
        cols.append((name, "CF", src, coarse.values[:, -1, f]))
        for d, desc in enumerate(DESCRIPTORS):
            cols.append((f"{name}__{desc}", "FF", src, fine[:, f, d]))
    cols = sorted((c for c in cols if _selects(subset, c[1], c[2])), key=lambda c: c[0])
    X = np.column_stack([c[3] for c in cols]) if cols else np.zeros((T, 0))
    return FeatureMatrix(tuple(c[0] for c in cols), tuple(c[1] for c in cols),
                         tuple(c[2] for c in cols), X.astype(float), labels)


def featurize(windowed: WindowedDataset, config: FeatureConfig,
              subset: str | Iterable[str] = ("CF", "FF")) -> tuple[FeatureMatrix, CoarseSeries]:
    """Full feature pipeline for a bucketed dataset."""
    coarse = coarse_features(windowed, config, per_window=config.fine_basis == "trailing")
    T = windowed.window_count
    fine = np.stack([fine_features(coarse, w, config.fine_basis, config.trailing_weeks,
                                   config.contiguous_runs) for w in range(T)]) if T else \
        np.zeros((0, len(coarse.names), len(DESCRIPTORS)))
    return build_matrix(coarse, fine, compute_labels(windowed), subset), coarse


def write_labels_csv(labels: ContestLabels, fh: TextIO, comment: str | None = None) -> None:
    if comment:
        fh.write(f"# {comment}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["window", "d_A", "d_B", "pc", "cr", "ci", "degenerate"])
    for w in range(len(labels)):
        writer.writerow([w, int(labels.d_A[w]), int(labels.d_B[w]), repr(float(labels.pc[w])),
                         CLASS_NAMES[int(labels.cr[w])], repr(float(labels.ci[w])),
                         int(bool(labels.degenerate[w]))])


def _data_lines(fh: TextIO) -> list[str]:
    return [line for line in fh if not line.startswith("#")]


def read_labels_csv(fh: TextIO) -> ContestLabels:
    rows = list(csv.DictReader(_data_lines(fh)))
    by_name = {v: k for k, v in CLASS_NAMES.items()}
    return ContestLabels(
        np.array([int(r["d_A"]) for r in rows], dtype=np.int64),
        np.array([int(r["d_B"]) for r in rows], dtype=np.int64),
        np.array([float(r["pc"]) for r in rows]),
        np.array([by_name[r["cr"]] for r in rows], dtype=np.int64),
        np.array([float(r["ci"]) for r in rows]),
        np.array([r["degenerate"] == "1" for r in rows], dtype=bool),
    )


def read_matrix_csv(fh: TextIO, labels: ContestLabels) -> FeatureMatrix:
    reader = csv.reader(_data_lines(fh))
    header = next(reader)
    parts = [h.split("|") for h in header[1:]]
    rows = [[float(v) for v in row[1:]] for row in reader]
    X = np.array(rows, dtype=float).reshape(len(rows), len(parts))
    if len(rows) != len(labels):
        raise ValueError(f"features have {len(rows)} rows but labels have {len(labels)}")
    return FeatureMatrix(tuple(p[0] for p in parts), tuple(p[1] for p in parts),
                         tuple(p[2] for p in parts), X, labels)


def matrix_csv_text(matrix: FeatureMatrix, comment: str | None = None) -> str:
    buf = io.StringIO()
    matrix.to_csv(buf, comment)
    return buf.getvalue()
