"""Seeded generator of review, microblog and download streams for two rival apps.

Each app has a latent popularity that moves week to week as a drifted,
optionally mean-reverting, random walk. With ``intraweek="ramp"`` daily
latent values interpolate linearly from the previous week's level to the
current one, so every week carries an intra-week trend ending at the level
that sets its downloads; ``"step"`` holds the week's level for all seven
days. Observable streams derive from the latent state:

* weekly downloads ``round(download_volume * softplus(L))``
* daily review counts ``Poisson(review_volume * softplus(L_day))``, with
  review polarity leaning toward the app ahead by ``sentiment_signal``
* "Both" posts carrying one comparative statement whose direction follows
  the sign of the latent gap with strength ``comparison_signal``
* single-app posts that mention the rival in proportion to its share

``volatility`` scales the weekly latent shocks; ``sigma`` scales a
multiplicative log-normal jitter on every daily observation rate.

Every random draw is made regardless of the signal parameters, so two
scenarios differing only in a signal strength share the same underlying
randomness.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .features import CLASS_NAMES, compute_labels
from .ingest import (
    DownloadRecord,
    MicroblogRecord,
    ReviewRecord,
    WindowSpec,
    bucket,
    dump_records,
    format_timestamp,
    parse_downloads,
    parse_timestamp,
)
from .textmine import ConfigError

STORES = tuple(f"store{i:02d}" for i in range(1, 12))

POSITIVE_REVIEWS = (
    "great app, unlocking is smooth", "love it, very convenient", "excellent and reliable",
    "cheap and easy to ride", "nice bikes, fast unlock", "reliable every morning, love it",
)
NEUTRAL_REVIEWS = (
    "rode to work today", "used it twice this week", "ok", "the map shows many bikes nearby",
    "",
)
NEGATIVE_REVIEWS = (
    "terrible, the app keeps crashing", "broken bike again, awful", "too expensive and slow",
    "bad service, still waiting for my refund", "annoying bugs, useless support",
)
POSITIVE_COMPARATIVES = ("better", "sturdier", "cheaper", "faster", "smoother", "lighter")
NEGATIVE_COMPARATIVES = ("worse", "heavier", "pricier", "slower", "clunkier")
CHATTER = ("nice weather for a ride", "commute done", "parked near the station",
           "weekend trip around the lake")


@dataclass(frozen=True)
class Scenario:
    weeks: int = 38
    seed: int = 0
    origin: str = "2016-06-20T00:00:00Z"
    base_A: float = 0.5
    base_B: float = 0.5
    drift_A: float = 0.0
    drift_B: float = 0.0
    reversion: float = 0.0
    volatility: float = 0.3
    intraweek: str = "ramp"
    sigma: float = 0.1
    sentiment_signal: float = 0.5
    comparison_signal: float = 0.5
    review_volume: float = 10.0
    post_volume: float = 8.0
    mention_volume: float = 8.0
    download_volume: float = 10000.0
    keywords_A: tuple[str, ...] = ("RedBike",)
    keywords_B: tuple[str, ...] = ("BlueBike",)
    user_pool: int = 5000

    def __post_init__(self) -> None:
        object.__setattr__(self, "keywords_A", tuple(self.keywords_A))
        object.__setattr__(self, "keywords_B", tuple(self.keywords_B))
        if self.weeks < 12:
            raise ConfigError("scenario needs weeks >= 12")
        for name in ("sentiment_signal", "comparison_signal"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.sigma < 0 or self.volatility < 0:
            raise ConfigError("sigma and volatility must be >= 0")
        if self.intraweek not in ("ramp", "step"):
            raise ConfigError(f"intraweek must be ramp or step, got {self.intraweek!r}")
        if not 0.0 <= self.reversion <= 1.0:
            raise ConfigError("reversion must lie in [0, 1]")
        for name in ("review_volume", "post_volume", "mention_volume", "download_volume"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not self.keywords_A or not self.keywords_B or self.user_pool < 1:
            raise ConfigError("keywords and user_pool must be non-empty")
        try:
            parse_timestamp(self.origin)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, obj: dict) -> "Scenario":
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, path: str | Path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["keywords_A"] = list(self.keywords_A)
        d["keywords_B"] = list(self.keywords_B)
        return d

    def window_spec(self) -> WindowSpec:
        return WindowSpec(parse_timestamp(self.origin), window_count=self.weeks)


@dataclass
class SynthOutput:
    reviews: str
    microblogs: str
    downloads: str
    truth: dict
    latent: np.ndarray = field(repr=False)

    def write(self, directory: str | Path) -> dict[str, Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, text in (("reviews.jsonl", self.reviews), ("microblogs.jsonl", self.microblogs),
                           ("downloads.jsonl", self.downloads),
                           ("truth.json", json.dumps(self.truth, sort_keys=True, indent=2) + "\n")):
            paths[name] = out / name
            with open(paths[name], "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return paths


def softplus(x):
    return np.logaddexp(0.0, x)


def latent_paths(scenario: Scenario, rng: np.random.Generator) -> np.ndarray:
    """Weekly latent levels, shape ``(weeks + 1, 2)``; row 0 is the pre-period level."""
    L = np.empty((scenario.weeks + 1, 2))
    base = np.array([scenario.base_A, scenario.base_B])
    drift = np.array([scenario.drift_A, scenario.drift_B])
    L[0] = base
    shocks = rng.standard_normal((scenario.weeks, 2))
    for w in range(scenario.weeks):
        trend_level = base + drift * (w + 1)
        L[w + 1] = (L[w] + drift + scenario.reversion * (trend_level - L[w])
                    + scenario.volatility * shocks[w])
    return L


def _timestamp(origin: datetime, day: int, seconds: float) -> datetime:
    return origin + timedelta(days=day, seconds=int(seconds))


def generate(scenario: Scenario) -> SynthOutput:
    origin = parse_timestamp(scenario.origin)
    root = np.random.SeedSequence(scenario.seed)
    latent_rng, review_rng, post_rng, mention_rng, noise_rng = (
        np.random.default_rng(s) for s in root.spawn(5))
    L = latent_paths(scenario, latent_rng)
    # multiplicative log-normal jitter on every daily rate, mean one
    jitter = np.exp(scenario.sigma * noise_rng.standard_normal((scenario.weeks * 7, 4))
                    - scenario.sigma ** 2 / 2)
    weekly = L[1:]
    kA, kB = scenario.keywords_A[0], scenario.keywords_B[0]
    names = {0: kA, 1: kB}

    reviews: list[ReviewRecord] = []
    posts: list[MicroblogRecord] = []
    for w in range(scenario.weeks):
        for d in range(7):
            day = 7 * w + d
            if scenario.intraweek == "ramp":
                level = L[w] + (d + 1) / 7.0 * (L[w + 1] - L[w])
            else:
                level = L[w + 1]
            gap = level[0] - level[1]
            share = softplus(level)

            # reviews
            counts = review_rng.poisson(scenario.review_volume * share * jitter[day, :2])
            for app in (0, 1):
                lean = math.tanh(gap if app == 0 else -gap) * scenario.sentiment_signal
                p_pos = 0.45 + 0.45 * lean
                p_neg = 0.45 - 0.45 * lean
                n = int(counts[app])
                u = review_rng.random(n)
                pick = review_rng.integers(0, 1 << 30, size=(n, 3))
                secs = review_rng.random(n) * 86400
                for i in range(n):
                    if u[i] < p_pos:
                        text = POSITIVE_REVIEWS[pick[i, 0] % len(POSITIVE_REVIEWS)]
                        rating = 4 + int(pick[i, 1] % 2)
                    elif u[i] < p_pos + p_neg:
                        text = NEGATIVE_REVIEWS[pick[i, 0] % len(NEGATIVE_REVIEWS)]
                        rating = 1 + int(pick[i, 1] % 2)
                    else:
                        text = NEUTRAL_REVIEWS[pick[i, 0] % len(NEUTRAL_REVIEWS)]
                        rating = 3
                    if pick[i, 2] % 10 == 0:
                        rating = None
                    reviews.append(ReviewRecord("AB"[app], STORES[pick[i, 2] % len(STORES)],
                                                _timestamp(origin, day, secs[i]), rating, text))

            # comparison posts in the Both dataset
            n = int(post_rng.poisson(scenario.post_volume * jitter[day, 2]))
            u = post_rng.random(n)
            pick = post_rng.integers(0, 1 << 30, size=(n, 4))
            engagement = post_rng.poisson(3.0, size=(n, 3))
            secs = post_rng.random(n) * 86400
            p_favour_A = 0.5 + 0.5 * scenario.comparison_signal * float(np.sign(gap))
            for i in range(n):
                winner = 0 if u[i] < p_favour_A else 1
                if pick[i, 0] % 2 == 0:
                    word = POSITIVE_COMPARATIVES[pick[i, 1] % len(POSITIVE_COMPARATIVES)]
                    text = f"{names[winner]} is {word} than {names[1 - winner]}"
                else:
                    word = NEGATIVE_COMPARATIVES[pick[i, 1] % len(NEGATIVE_COMPARATIVES)]
                    text = f"{names[1 - winner]} is {word} than {names[winner]}"
                posts.append(MicroblogRecord("Both", _timestamp(origin, day, secs[i]),
                                             f"u{pick[i, 2] % scenario.user_pool}", text,
                                             *map(int, engagement[i])))

            # single-app datasets: the rival is mentioned in proportion to its share
            noisy = share * jitter[day, 2:]
            rival_share = noisy[::-1] / noisy.sum()
            for app in (0, 1):
                n = int(mention_rng.poisson(scenario.mention_volume))
                u = mention_rng.random(n)
                pick = mention_rng.integers(0, 1 << 30, size=(n, 2))
                engagement = mention_rng.poisson(2.0, size=(n, 3))
                secs = mention_rng.random(n) * 86400
                for i in range(n):
                    text = f"{names[app]}: {CHATTER[pick[i, 0] % len(CHATTER)]}"
                    if u[i] < rival_share[app]:
                        text += f", saw a {names[1 - app]} too"
                    posts.append(MicroblogRecord("AB"[app], _timestamp(origin, day, secs[i]),
                                                 f"u{pick[i, 1] % scenario.user_pool}", text,
                                                 *map(int, engagement[i])))

    downloads = []
    for w in range(scenario.weeks):
        volume = np.rint(scenario.download_volume * softplus(weekly[w])).astype(int)
        ts = origin + timedelta(days=7 * w, hours=12)
        downloads.append(DownloadRecord("A", ts, int(volume[0])))
        downloads.append(DownloadRecord("B", ts, int(volume[1])))

    reviews.sort(key=lambda r: (r.timestamp, r.app))
    posts.sort(key=lambda p: p.timestamp)
    downloads_text = dump_records(downloads)
    labels = compute_labels(bucket([], [], parse_downloads(downloads_text),
                                   scenario.window_spec()))
    truth = {
        "scenario": scenario.to_dict(),
        "weeks": [
            {"week": w, "window_start": format_timestamp(origin + timedelta(days=7 * w)),
             "L_A": float(weekly[w, 0]), "L_B": float(weekly[w, 1]),
             "d_A": int(labels.d_A[w]), "d_B": int(labels.d_B[w]),
             "pc": float(labels.pc[w]), "cr": CLASS_NAMES[int(labels.cr[w])],
             "ci": float(labels.ci[w]), "degenerate": bool(labels.degenerate[w])}
            for w in range(scenario.weeks)
        ],
    }
    return SynthOutput(dump_records(reviews), dump_records(posts), downloads_text, truth, L)
