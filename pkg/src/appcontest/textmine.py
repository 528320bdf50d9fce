"""Lexicon sentiment scoring and comparative-opinion detection.

Matching is case-insensitive. In the default ``"substring"`` mode a term
matches anywhere in the text, which works for unsegmented CJK text as well as
space-delimited text. ``"token"`` mode requires the match to be bounded by
non-word characters.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

MATCH_MODES = ("substring", "token")


class ConfigError(ValueError):
    """Invalid lexicon, dictionary, threshold or other configuration value."""


def _pattern(term: str, mode: str) -> str:
    body = re.escape(term.casefold())
    if mode == "token":
        return rf"(?<!\w){body}(?!\w)"
    if mode == "substring":
        return body
    raise ConfigError(f"unknown match mode {mode!r}")


def _contains(text: str, term: str, mode: str) -> bool:
    if mode == "substring":
        return term.casefold() in text
    return re.search(_pattern(term, mode), text) is not None


@dataclass(frozen=True)
class SentimentLexicon:
    entries: Mapping[str, float]

    def __post_init__(self) -> None:
        seen = set()
        for term in self.entries:
            if not term:
                raise ConfigError("lexicon terms must be non-empty")
            key = term.casefold()
            if key in seen:
                raise ConfigError(f"duplicate lexicon term {term!r}")
            seen.add(key)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "SentimentLexicon":
        entries: dict[str, float] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                term, weight = obj.get("term"), obj.get("weight")
                if not isinstance(term, str) or not isinstance(weight, (int, float)):
                    raise ConfigError(f"{path}:{lineno}: need string term and numeric weight")
                if term in entries:
                    raise ConfigError(f"{path}:{lineno}: duplicate lexicon term {term!r}")
                entries[term] = float(weight)
        return cls(entries)


@dataclass(frozen=True)
class SentimentDistribution:
    p_neg: float
    p_neu: float
    p_pos: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_neg, self.p_neu, self.p_pos])


UNIFORM = SentimentDistribution(1 / 3, 1 / 3, 1 / 3)


@dataclass(frozen=True)
class ComparativeDictionary:
    positive_terms: frozenset[str]
    negative_terms: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "positive_terms", frozenset(self.positive_terms))
        object.__setattr__(self, "negative_terms", frozenset(self.negative_terms))
        pos = {t.casefold() for t in self.positive_terms}
        neg = {t.casefold() for t in self.negative_terms}
        if "" in pos or "" in neg:
            raise ConfigError("comparative terms must be non-empty")
        if pos & neg:
            raise ConfigError(f"terms in both polarities: {sorted(pos & neg)}")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ComparativeDictionary":
        pos, neg = set(), set()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                term, polarity = obj.get("term"), obj.get("polarity")
                if not isinstance(term, str) or polarity not in ("pos", "neg"):
                    raise ConfigError(f"{path}:{lineno}: need string term and polarity pos|neg")
                (pos if polarity == "pos" else neg).add(term)
        return cls(frozenset(pos), frozenset(neg))


@dataclass(frozen=True)
class ComparisonResult:
    count: int = 0
    score_A: int = 0
    score_B: int = 0

    def __add__(self, other: "ComparisonResult") -> "ComparisonResult":
        return ComparisonResult(self.count + other.count,
                                self.score_A + other.score_A,
                                self.score_B + other.score_B)


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def raw_sentiment(text: str, lexicon: SentimentLexicon, mode: str = "substring") -> float:
    folded = text.casefold()
    return math.fsum(w for term, w in lexicon.entries.items() if _contains(folded, term, mode))


def score_sentiment(text: str, lexicon: SentimentLexicon, mode: str = "substring") -> float:
    """Logistic of the summed weights of the distinct lexicon terms in ``text``."""
    return logistic(raw_sentiment(text, lexicon, mode))


def sentiment_distribution(
    scores: Sequence[float], thresholds: tuple[float, float] = (0.4, 0.6)
) -> SentimentDistribution:
    """Proportions of scores below ``lo``, between, and above ``hi``.

    An empty score list gives the uniform distribution.
    """
    lo, hi = thresholds
    if not 0 <= lo < hi <= 1:
        raise ConfigError(f"thresholds must satisfy 0 <= lo < hi <= 1, got {thresholds}")
    n = len(scores)
    if n == 0:
        return UNIFORM
    neg = sum(1 for s in scores if s < lo)
    pos = sum(1 for s in scores if s > hi)
    return SentimentDistribution(neg / n, (n - neg - pos) / n, pos / n)


def cosine_similarity(u: SentimentDistribution | Sequence[float],
                      v: SentimentDistribution | Sequence[float]) -> float:
    a = u.as_array() if isinstance(u, SentimentDistribution) else np.asarray(u, dtype=float)
    b = v.as_array() if isinstance(v, SentimentDistribution) else np.asarray(v, dtype=float)
    na, nb = math.sqrt(float(a @ a)), math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    # symmetric by construction: a@b == b@a and na*nb == nb*na bitwise
    return min(1.0, float(a @ b) / (na * nb))


def count_mentions(texts: Iterable[str], keywords: Sequence[str], mode: str = "substring") -> int:
    """Number of texts containing at least one keyword."""
    total = 0
    for text in texts:
        folded = text.casefold()
        if any(_contains(folded, kw, mode) for kw in keywords):
            total += 1
    return total


def _keyword_ends(text: str, keywords: Sequence[str], mode: str) -> list[int]:
    ends = []
    for kw in {k.casefold() for k in keywords if k}:
        # zero-width lookahead finds overlapping occurrences too
        for m in re.finditer(f"(?={_pattern(kw, mode)})", text):
            ends.append(m.start() + len(kw))
    return sorted(ends)


class ComparisonDetector:
    """Compiled form of a :class:`ComparativeDictionary` plus app keywords."""

    def __init__(self, dictionary: ComparativeDictionary, keywords_A: Sequence[str],
                 keywords_B: Sequence[str], mode: str = "substring") -> None:
        self.mode = mode
        self.keywords_A = tuple(keywords_A)
        self.keywords_B = tuple(keywords_B)
        self.polarity = {t.casefold(): +1 for t in dictionary.positive_terms}
        self.polarity.update({t.casefold(): -1 for t in dictionary.negative_terms})
        # longest-first alternation gives leftmost-longest, non-overlapping hits
        terms = sorted(self.polarity, key=lambda t: (-len(t), t))
        self._terms = re.compile("|".join(_pattern(t, mode) for t in terms)) if terms else None

    def __call__(self, text: str) -> ComparisonResult:
        if self._terms is None:
            return ComparisonResult()
        folded = text.casefold()
        hits = list(self._terms.finditer(folded))
        if not hits:
            return ComparisonResult()
        ends_A = _keyword_ends(folded, self.keywords_A, self.mode)
        ends_B = _keyword_ends(folded, self.keywords_B, self.mode)
        score_A = score_B = 0
        for hit in hits:
            start = hit.start()
            a = _nearest_before(ends_A, start)
            b = _nearest_before(ends_B, start)
            if a is None and b is None:
                continue
            subject_is_A = b is None or (a is not None and a >= b)
            favours_A = subject_is_A == (self.polarity[hit.group(0)] > 0)
            if favours_A:
                score_A += 1
            else:
                score_B += 1
        return ComparisonResult(len(hits), score_A, score_B)


def _nearest_before(ends: list[int], position: int) -> int | None:
    best = None
    for end in ends:
        if end > position:
            break
        best = end
    return best


def detect_comparisons(text: str, dictionary: ComparativeDictionary,
                       keywords_A: Sequence[str], keywords_B: Sequence[str],
                       mode: str = "substring") -> ComparisonResult:
    """Count comparative-word occurrences and score their direction.

    The subject of each comparative word is the app whose keyword ends
    nearest before it (ties go to A). A positive word credits the subject,
    a negative word credits the other app. Words with no preceding app
    keyword only add to ``count``.
    """
    return ComparisonDetector(dictionary, keywords_A, keywords_B, mode)(text)
