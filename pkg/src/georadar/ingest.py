"""Stream ingestion: record parsing, tokenization, and the sliding query
window over a JSONL tweet stream.

Stream format: one JSON object per line with fields id (str), user_id (str),
timestamp (int, epoch seconds), lat, lon (degrees), text (str). Lines whose
first non-space character is '#' are comments. Records that fail to parse
are skipped and counted by category, never fatal.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import Iterable, Mapping

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_MIN_TOKEN_LEN = 2

_REQUIRED_FIELDS = ("id", "user_id", "timestamp", "lat", "lon", "text")


class ParseError(ValueError):
    """Base for per-record parse failures. `category` keys the skip counter."""

    category = "parse_error"


class MalformedLineError(ParseError):
    category = "malformed_line"


class InvalidCoordinatesError(ParseError):
    category = "invalid_coordinates"


class EmptyKeywordsError(ParseError):
    category = "empty_keywords"


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Stopword set from a file (one token per line, '#' comments).

    With no path, the packaged default English list is used.
    """
    if path is None:
        text = resources.files("georadar").joinpath("stopwords.txt").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def tokenize(text: str, stopwords: frozenset[str]) -> tuple[str, ...]:
    """Lowercased alphanumeric tokens, stopwords and tokens shorter than two
    characters removed, multiplicity and order preserved.

    Idempotent: tokenizing ' '.join(result) returns the same tuple.
    """
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) >= _MIN_TOKEN_LEN and tok not in stopwords:
            out.append(tok)
    return tuple(out)


@dataclass(frozen=True)
class Tweet:
    id: str
    user_id: str
    timestamp: int
    lat: float
    lon: float
    keywords: tuple[str, ...]

    @cached_property
    def keyword_counts(self) -> Counter:
        return Counter(self.keywords)

    def to_record(self) -> dict:
        """Round-trippable plain-dict form (keywords re-derivable, kept)."""
        return {
            "id": self.id,
            "user_id": self.user_id,
            "timestamp": self.timestamp,
            "lat": self.lat,
            "lon": self.lon,
            "keywords": list(self.keywords),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "Tweet":
        return cls(
            id=rec["id"],
            user_id=rec["user_id"],
            timestamp=rec["timestamp"],
            lat=rec["lat"],
            lon=rec["lon"],
            keywords=tuple(rec["keywords"]),
        )


def parse_record(line: str, stopwords: frozenset[str]) -> Tweet:
    """One JSONL line to a Tweet.

    Raises MalformedLineError (bad JSON, missing field, wrong type),
    InvalidCoordinatesError (non-finite or out-of-range lat/lon), or
    EmptyKeywordsError (no tokens survive tokenization).
    """
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLineError(f"bad json: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedLineError("record is not an object")
    for name in _REQUIRED_FIELDS:
        if name not in raw:
            raise MalformedLineError(f"missing field {name!r}")
    if not isinstance(raw["id"], str) or not isinstance(raw["user_id"], str):
        raise MalformedLineError("id and user_id must be strings")
    if not isinstance(raw["text"], str):
        raise MalformedLineError("text must be a string")
    ts = raw["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise MalformedLineError("timestamp must be an integer")
    lat, lon = raw["lat"], raw["lon"]
    for v in (lat, lon):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InvalidCoordinatesError("coordinates must be numbers")
        if not math.isfinite(v):
            raise InvalidCoordinatesError("coordinates must be finite")
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise InvalidCoordinatesError(f"out of range: ({lat}, {lon})")
    keywords = tokenize(raw["text"], stopwords)
    if not keywords:
        raise EmptyKeywordsError("no keywords after tokenization")
    return Tweet(
        id=raw["id"],
        user_id=raw["user_id"],
        timestamp=ts,
        lat=float(lat),
        lon=float(lon),
        keywords=keywords,
    )


@dataclass(frozen=True)
class WindowDiff:
    """Removal/insertion delta between consecutive windows, id-sorted."""

    removed: tuple[Tweet, ...]
    inserted: tuple[Tweet, ...]


class QueryWindow:
    """Tweets with timestamps in [start, end). Treated as immutable; advance
    produces a new window."""

    __slots__ = ("start", "end", "tweets")

    def __init__(self, start: int, end: int, tweets: dict[str, Tweet]) -> None:
        if end <= start:
            raise ValueError("window end must exceed start")
        self.start = start
        self.end = end
        self.tweets = tweets

    @property
    def length(self) -> int:
        return self.end - self.start

    def __len__(self) -> int:
        return len(self.tweets)

    def __contains__(self, tweet_id: str) -> bool:
        return tweet_id in self.tweets

    def sorted_ids(self) -> list[str]:
        return sorted(self.tweets)

    @classmethod
    def empty(cls, end: int, length: int) -> "QueryWindow":
        return cls(end - length, end, {})


def advance_window(
    window: QueryWindow, new_end: int, buffered: Iterable[Tweet]
) -> tuple[QueryWindow, WindowDiff]:
    """Slide the window forward to new_end, preserving its length.

    `buffered` holds the not-yet-delivered tweets with timestamp < new_end.
    Tweets older than the new start (late arrivals) are silently excluded;
    callers that need the count can diff against len(buffered). A buffered
    timestamp >= new_end or a duplicate id raises ValueError.
    """
    if new_end <= window.end:
        raise ValueError("window must advance forward")
    new_start = new_end - window.length
    removed = []
    kept: dict[str, Tweet] = {}
    for tid, t in window.tweets.items():
        if t.timestamp < new_start:
            removed.append(t)
        else:
            kept[tid] = t
    inserted = []
    for t in buffered:
        if t.timestamp >= new_end:
            raise ValueError("buffered tweet beyond the new window end")
        if t.timestamp < new_start:
            continue
        if t.id in kept:
            raise ValueError(f"duplicate tweet id {t.id!r}")
        kept[t.id] = t
        inserted.append(t)
    removed.sort(key=lambda t: t.id)
    inserted.sort(key=lambda t: t.id)
    return (
        QueryWindow(new_start, new_end, kept),
        WindowDiff(removed=tuple(removed), inserted=tuple(inserted)),
    )


class StreamCursor:
    """Incremental reader over a JSONL stream file.

    Tracks a byte offset and one look-ahead tweet so replay can be suspended
    and resumed exactly. Skip counts accumulate in `stats`.
    """

    def __init__(
        self,
        path: str,
        stopwords: frozenset[str],
        offset: int = 0,
        pending: Tweet | None = None,
        stats: Counter | None = None,
    ) -> None:
        self.path = path
        self.stopwords = stopwords
        self.offset = offset
        self.pending = pending
        self.stats: Counter = stats if stats is not None else Counter()
        # opened on first read so restored state can be inspected on hosts
        # that no longer have the stream file
        self._fh = None
        self.exhausted = False

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def _read_next(self) -> Tweet | None:
        if self._fh is None:
            self._fh = open(self.path, "r", encoding="utf-8")
            self._fh.seek(self.offset)
        while True:
            line = self._fh.readline()
            if line == "":
                self.exhausted = True
                return None
            self.offset = self._fh.tell()
            self.stats["lines"] += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                self.stats["comments_or_blank"] += 1
                continue
            try:
                tweet = parse_record(stripped, self.stopwords)
            except ParseError as exc:
                self.stats[exc.category] += 1
                continue
            self.stats["parsed"] += 1
            return tweet

    def peek(self) -> Tweet | None:
        if self.pending is None:
            self.pending = self._read_next()
        return self.pending

    def take_until(self, end: int) -> list[Tweet]:
        """Consume tweets with timestamp < end, holding back the first one at
        or beyond it."""
        out = []
        while True:
            t = self.peek()
            if t is None:
                return out
            if t.timestamp >= end:
                return out
            out.append(t)
            self.pending = None

    @property
    def finished(self) -> bool:
        return self.exhausted and self.pending is None
