"""Parsing and weekly bucketing of review, microblog and download streams.

All three inputs are JSON Lines. Field names::

    reviews     {"app", "store", "ts", "rating", "text"}
    microblogs  {"dataset", "ts", "user_id", "text", "reposts", "comments", "likes"}
    downloads   {"app", "ts", "downloads"}

``ts`` is an RFC 3339 instant; it is normalised to UTC with seconds precision.
"""

from __future__ import annotations

import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import IO, Callable, Iterable, Iterator, TypeVar, Union

APPS = ("A", "B")
DATASETS = ("Both", "A", "B")

Stream = Union[bytes, str, IO[bytes], IO[str], Iterable[str]]

_RFC3339 = re.compile(
    r"^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$"
)


class IngestError(ValueError):
    """A record stream could not be parsed or failed validation."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        self.reason = message
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ReviewRecord:
    app: str
    store: str
    timestamp: datetime
    rating: int | None
    text: str


@dataclass(frozen=True)
class MicroblogRecord:
    dataset: str
    timestamp: datetime
    user_id: str
    text: str
    reposts: int
    comments: int
    likes: int


@dataclass(frozen=True)
class DownloadRecord:
    app: str
    timestamp: datetime
    downloads: int


def parse_timestamp(value: object) -> datetime:
    if not isinstance(value, str) or not _RFC3339.match(value):
        raise ValueError(f"timestamp {value!r} is not RFC 3339")
    text = value.replace(" ", "T").replace("t", "T")
    if text[-1] in "Zz":
        text = text[:-1] + "+00:00"
    # fractional seconds are dropped; 3.10's fromisoformat rejects odd widths
    text = re.sub(r"\.\d+", "", text, count=1)
    ts = datetime.fromisoformat(text).astimezone(timezone.utc)
    return ts.replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _lines(stream: Stream) -> Iterator[str]:
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for line in stream:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        yield line


def _count(obj: dict, key: str) -> int:
    value = obj.get(key, 0)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{key} must be an integer, got {value!r}")
    if value < 0:
        raise ValueError(f"{key} must be non-negative, got {value}")
    return value


def _string(obj: dict, key: str, default: str | None = None) -> str:
    value = obj.get(key, default)
    if not isinstance(value, str):
        raise ValueError(f"{key} must be a string, got {value!r}")
    return value


def _choice(obj: dict, key: str, allowed: tuple[str, ...]) -> str:
    value = obj.get(key)
    if value not in allowed:
        raise ValueError(f"unknown {key} {value!r}; expected one of {allowed}")
    return value


def _review(obj: dict) -> ReviewRecord:
    rating = obj.get("rating")
    if rating is not None:
        if isinstance(rating, bool) or not isinstance(rating, int):
            raise ValueError(f"rating must be an integer, got {rating!r}")
        if not 1 <= rating <= 5:
            raise ValueError(f"rating {rating} outside [1, 5]")
    return ReviewRecord(
        app=_choice(obj, "app", APPS),
        store=_string(obj, "store", ""),
        timestamp=parse_timestamp(obj.get("ts")),
        rating=rating,
        text=_string(obj, "text", ""),
    )


def _microblog(obj: dict) -> MicroblogRecord:
    return MicroblogRecord(
        dataset=_choice(obj, "dataset", DATASETS),
        timestamp=parse_timestamp(obj.get("ts")),
        user_id=str(obj.get("user_id", "")),
        text=_string(obj, "text", ""),
        reposts=_count(obj, "reposts"),
        comments=_count(obj, "comments"),
        likes=_count(obj, "likes"),
    )


def _download(obj: dict) -> DownloadRecord:
    if "downloads" not in obj:
        raise ValueError("missing downloads")
    return DownloadRecord(
        app=_choice(obj, "app", APPS),
        timestamp=parse_timestamp(obj.get("ts")),
        downloads=_count(obj, "downloads"),
    )


R = TypeVar("R")


def _parse(
    stream: Stream, build: Callable[[dict], R], issues: list[IngestError] | None
) -> list[R]:
    records: list[R] = []
    for lineno, line in enumerate(_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("expected a JSON object")
            records.append(build(obj))
        except ValueError as exc:
            # json.JSONDecodeError is a ValueError subclass
            err = IngestError(str(exc), lineno)
            if issues is None:
                raise err from exc
            issues.append(err)
    return records


def parse_reviews(
    stream: Stream, issues: list[IngestError] | None = None
) -> list[ReviewRecord]:
    """Parse a reviews JSONL stream.

    Raises :class:`IngestError` on the first bad line unless an ``issues``
    list is supplied, in which case bad lines are appended there and skipped.
    """
    return _parse(stream, _review, issues)


def parse_microblogs(
    stream: Stream, issues: list[IngestError] | None = None
) -> list[MicroblogRecord]:
    return _parse(stream, _microblog, issues)


def parse_downloads(
    stream: Stream, issues: list[IngestError] | None = None
) -> list[DownloadRecord]:
    return _parse(stream, _download, issues)


def dump_records(records: Iterable[ReviewRecord | MicroblogRecord | DownloadRecord]) -> str:
    """Serialise records back to JSONL in the input field layout."""
    out = []
    for rec in records:
        if isinstance(rec, ReviewRecord):
            obj = {"app": rec.app, "store": rec.store, "ts": format_timestamp(rec.timestamp),
                   "rating": rec.rating, "text": rec.text}
        elif isinstance(rec, MicroblogRecord):
            obj = {"dataset": rec.dataset, "ts": format_timestamp(rec.timestamp),
                   "user_id": rec.user_id, "text": rec.text, "reposts": rec.reposts,
                   "comments": rec.comments, "likes": rec.likes}
        else:
            obj = {"app": rec.app, "ts": format_timestamp(rec.timestamp),
                   "downloads": rec.downloads}
        out.append(json.dumps(obj, ensure_ascii=False) + "\n")
    return "".join(out)


@dataclass(frozen=True)
class WindowSpec:
    """Epoch-anchored windowing: window ``w`` covers
    ``[origin + w*window_length, origin + (w+1)*window_length)``.

    ``window_count`` fixes T; records at or beyond the last window are then
    reported as skipped. When None, T is derived from the data.
    """

    origin: datetime
    window_length: timedelta = timedelta(days=7)
    sub_window_length: timedelta = timedelta(days=1)
    window_count: int | None = None

    def __post_init__(self) -> None:
        if self.origin.tzinfo is None:
            raise ValueError("origin must be timezone-aware")
        if self.sub_window_length <= timedelta(0) or self.window_length <= timedelta(0):
            raise ValueError("window lengths must be positive")
        if self.window_length % self.sub_window_length != timedelta(0):
            raise ValueError("window_length must be an integer multiple of sub_window_length")
        if self.window_count is not None and self.window_count < 0:
            raise ValueError("window_count must be non-negative")

    @property
    def sub_windows(self) -> int:
        return self.window_length // self.sub_window_length

    def locate(self, ts: datetime) -> tuple[int, int]:
        """(window, sub-window) index of ``ts``; window may be negative."""
        offset = ts - self.origin
        w = offset // self.window_length
        s = (offset - w * self.window_length) // self.sub_window_length
        return w, s

    def window_start(self, w: int) -> datetime:
        return self.origin + w * self.window_length


def infer_origin(timestamps: Iterable[datetime]) -> datetime:
    """Midnight UTC of the earliest timestamp."""
    first = min(timestamps)
    return first.astimezone(timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)


@dataclass
class WindowedDataset:
    """Records grouped by (window, sub-window).

    ``reviews[app][w][s]``, ``microblogs[dataset][w][s]`` and
    ``downloads[app][w][s]`` are lists in input order.
    """

    spec: WindowSpec
    window_count: int
    reviews: dict[str, list[list[list[ReviewRecord]]]]
    microblogs: dict[str, list[list[list[MicroblogRecord]]]]
    downloads: dict[str, list[list[list[DownloadRecord]]]]
    skipped: Counter = field(default_factory=Counter)

    @property
    def skipped_total(self) -> int:
        return sum(self.skipped.values())

    def cell_count(self) -> int:
        total = 0
        for groups in (self.reviews, self.microblogs, self.downloads):
            for windows in groups.values():
                total += sum(len(cell) for window in windows for cell in window)
        return total

    def window_downloads(self, app: str) -> list[int]:
        return [sum(r.downloads for cell in window for r in cell)
                for window in self.downloads[app]]


def bucket(
    reviews: Iterable[ReviewRecord],
    microblogs: Iterable[MicroblogRecord],
    downloads: Iterable[DownloadRecord],
    spec: WindowSpec,
) -> WindowedDataset:
    reviews, microblogs, downloads = list(reviews), list(microblogs), list(downloads)
    skipped: Counter = Counter()

    def in_span(kind: str, records: list) -> list[tuple[int, int, object]]:
        placed = []
        for rec in records:
            w, s = spec.locate(rec.timestamp)
            if w < 0 or (spec.window_count is not None and w >= spec.window_count):
                skipped[kind] += 1
                continue
            placed.append((w, s, rec))
        return placed

    placed = {
        "reviews": in_span("reviews", reviews),
        "microblogs": in_span("microblogs", microblogs),
        "downloads": in_span("downloads", downloads),
    }
    if spec.window_count is not None:
        T = spec.window_count
    else:
        T = 1 + max((w for items in placed.values() for w, _, _ in items), default=-1)

    def grid(keys: tuple[str, ...]) -> dict[str, list[list[list]]]:
        return {k: [[[] for _ in range(spec.sub_windows)] for _ in range(T)] for k in keys}

    out = WindowedDataset(spec, T, grid(APPS), grid(DATASETS), grid(APPS), skipped)
    for w, s, rec in placed["reviews"]:
        out.reviews[rec.app][w][s].append(rec)
    for w, s, rec in placed["microblogs"]:
        out.microblogs[rec.dataset][w][s].append(rec)
    for w, s, rec in placed["downloads"]:
        out.downloads[rec.app][w][s].append(rec)
    return out
