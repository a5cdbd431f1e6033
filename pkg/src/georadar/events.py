"""Event records, the append-only event store, and query evaluation.

Queries combine an optional time span (closed-interval overlap), an exact
keyword membership test against the event's ranked keywords, and a radius
around a point. Results order by score descending, then event id ascending.
The store keeps numpy columns for the numeric predicates; the keyword test
runs on the survivors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geo import haversine_m, haversine_m_many
from .ingest import Tweet


@dataclass(frozen=True)
class EventRecord:
    event_id: int
    pivot_id: str
    lat: float
    lon: float
    t_start: int
    t_end: int
    keywords: tuple[str, ...]  # ranked by count desc, then alphabetically
    score: float
    member_ids: tuple[str, ...]
    detected_at: int  # window end of the emitting shift

    def to_payload(self) -> dict:
        return {
            "event_id": self.event_id,
            "pivot_id": self.pivot_id,
            "lat": self.lat,
            "lon": self.lon,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "keywords": list(self.keywords),
            "score": self.score,
            "member_ids": list(self.member_ids),
            "detected_at": self.detected_at,
        }

    @classmethod
    def from_payload(cls, raw: Mapping) -> "EventRecord":
        return cls(
            event_id=raw["event_id"],
            pivot_id=raw["pivot_id"],
            lat=raw["lat"],
            lon=raw["lon"],
            t_start=raw["t_start"],
            t_end=raw["t_end"],
            keywords=tuple(raw["keywords"]),
            score=raw["score"],
            member_ids=tuple(raw["member_ids"]),
            detected_at=raw["detected_at"],
        )


@dataclass(frozen=True)
class EventQuery:
    """All filters optional; location and radius must come together."""

    t_from: int | None = None
    t_to: int | None = None
    keyword: str | None = None
    lat: float | None = None
    lon: float | None = None
    radius_m: float | None = None

    def __post_init__(self) -> None:
        if self.t_from is not None and self.t_to is not None and self.t_from > self.t_to:
            raise ValueError("query time span is inverted")
        geo_parts = (self.lat is None, self.lon is None, self.radius_m is None)
        if len(set(geo_parts)) != 1:
            raise ValueError("lat, lon, and radius_m must be given together")
        if self.radius_m is not None and self.radius_m <= 0:
            raise ValueError("radius must be positive")


def matches(record: EventRecord, q: EventQuery) -> bool:
    """Reference predicate; the store's column path must agree exactly."""
    if q.t_from is not None and record.t_end < q.t_from:
        return False
    if q.t_to is not None and record.t_start > q.t_to:
        return False
    if q.keyword is not None and q.keyword not in record.keywords:
        return False
    if q.radius_m is not None:
        assert q.lat is not None and q.lon is not None
        if haversine_m(record.lat, record.lon, q.lat, q.lon) > q.radius_m:
            return False
    return True


def _result_order(records: Iterable[EventRecord]) -> list[EventRecord]:
    return sorted(records, key=lambda r: (-r.score, r.event_id))


class EventStore:
    """Append-only event log plus the member tweets each event refers to."""

    def __init__(self) -> None:
        self.records: list[EventRecord] = []
        self._by_id: dict[int, EventRecord] = {}
        self.tweets: dict[str, Tweet] = {}
        self._columns: dict[str, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.records)

    def add(self, record: EventRecord, member_tweets: Sequence[Tweet]) -> None:
        if record.event_id in self._by_id:
            raise ValueError(f"duplicate event id {record.event_id}")
        self.records.append(record)
        self._by_id[record.event_id] = record
        for t in member_tweets:
            self.tweets[t.id] = t
        self._columns = None

    def get(self, event_id: int) -> EventRecord | None:
        return self._by_id.get(event_id)

    def members_of(self, record: EventRecord) -> list[Tweet]:
        return [self.tweets[tid] for tid in record.member_ids if tid in self.tweets]

    def _ensure_columns(self) -> dict[str, np.ndarray]:
        if self._columns is None:
            self._columns = {
                "lat": np.array([r.lat for r in self.records], dtype=np.float64),
                "lon": np.array([r.lon for r in self.records], dtype=np.float64),
                "t_start": np.array([r.t_start for r in self.records], dtype=np.int64),
                "t_end": np.array([r.t_end for r in self.records], dtype=np.int64),
            }
        return self._columns

    def query(self, q: EventQuery) -> list[EventRecord]:
        """Column-filtered query; equals a full scan with `matches`."""
        if not self.records:
            return []
        cols = self._ensure_columns()
        mask = np.ones(len(self.records), dtype=bool)
        if q.t_from is not None:
            mask &= cols["t_end"] >= q.t_from
        if q.t_to is not None:
            mask &= cols["t_start"] <= q.t_to
        if q.radius_m is not None:
            assert q.lat is not None and q.lon is not None
            mask &= haversine_m_many(cols["lat"], cols["lon"], q.lat, q.lon) <= q.radius_m
        picked = [self.records[i] for i in np.flatnonzero(mask)]
        if q.keyword is not None:
            picked = [r for r in picked if q.keyword in r.keywords]
        return _result_order(picked)

    # --- persistence ------------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "records": [r.to_payload() for r in self.records],
            "tweets": [self.tweets[tid].to_record() for tid in sorted(self.tweets)],
        }

    @classmethod
    def from_payload(cls, raw: Mapping) -> "EventStore":
        store = cls()
        for rec in raw["records"]:
            store.records.append(EventRecord.from_payload(rec))
        store._by_id = {r.event_id: r for r in store.records}
        store.tweets = {
            rec["id"]: Tweet.from_record(rec) for rec in raw["tweets"]
        }
        return store


def query_events(store: EventStore, q: EventQuery) -> list[EventRecord]:
    return store.query(q)


def rank_keywords(counts: Mapping[str, int], top_k: int) -> tuple[str, ...]:
    """Most frequent keywords, count desc then alphabetical, at most top_k."""
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(kw for kw, _ in ordered[:top_k])
