"""Streaming activity summaries: additive tweet clusters, an active set with
absorb/merge maintenance, and a pyramid snapshot store for historical
retrieval.

Cluster summaries are pure sums, so absorbing tweets one at a time, in any
grouping, or merging partial clusters all yield the same fields (integer
fields exactly, float fields up to accumulation rounding).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .config import TimelineConfig
from .geo import EARTH_RADIUS_M, M_PER_DEG_LAT, epanechnikov, haversine_m, haversine_m_many
from .ingest import Tweet


@dataclass
class TweetCluster:
    """Additive summary of a set of tweets.

    n: member count; ml/msl: per-coordinate sums and squared sums of
    (lat, lon); mt/mst: sums and squared sums of timestamps (exact ints);
    me: keyword occurrence counts with multiplicity. seq is a creation
    sequence number used only to break maintenance ties deterministically.
    """

    n: int = 0
    ml: list[float] = field(default_factory=lambda: [0.0, 0.0])
    msl: list[float] = field(default_factory=lambda: [0.0, 0.0])
    mt: int = 0
    mst: int = 0
    me: Counter = field(default_factory=Counter)
    seq: int = 0

    def absorb(self, tweet: Tweet) -> "TweetCluster":
        self.n += 1
        self.ml[0] += tweet.lat
        self.ml[1] += tweet.lon
        self.msl[0] += tweet.lat * tweet.lat
        self.msl[1] += tweet.lon * tweet.lon
        self.mt += tweet.timestamp
        self.mst += tweet.timestamp * tweet.timestamp
        self.me.update(tweet.keywords)
        return self

    @staticmethod
    def merge(a: "TweetCluster", b: "TweetCluster") -> "TweetCluster":
        out = TweetCluster(
            n=a.n + b.n,
            ml=[a.ml[0] + b.ml[0], a.ml[1] + b.ml[1]],
            msl=[a.msl[0] + b.msl[0], a.msl[1] + b.msl[1]],
            mt=a.mt + b.mt,
            mst=a.mst + b.mst,
            me=a.me + b.me,
            seq=min(a.seq, b.seq),
        )
        return out

    def center(self) -> tuple[float, float]:
        if self.n == 0:
            raise ValueError("empty cluster has no center")
        return self.ml[0] / self.n, self.ml[1] / self.n

    def mean_timestamp(self) -> float:
        if self.n == 0:
            raise ValueError("empty cluster has no mean timestamp")
        return self.mt / self.n

    def spatial_std_m(self) -> float:
        """Root summed per-coordinate variance, in meters.

        Longitude variance is scaled by cos(center latitude). Variances are
        clamped at zero against rounding.
        """
        if self.n == 0:
            raise ValueError("empty cluster has no spread")
        clat, _ = self.center()
        var_lat = max(0.0, self.msl[0] / self.n - (self.ml[0] / self.n) ** 2)
        var_lon = max(0.0, self.msl[1] / self.n - (self.ml[1] / self.n) ** 2)
        m_lat = M_PER_DEG_LAT
        m_lon = M_PER_DEG_LAT * abs(math.cos(math.radians(clat)))
        return math.sqrt(var_lat * m_lat * m_lat + var_lon * m_lon * m_lon)

    def copy(self) -> "TweetCluster":
        return TweetCluster(
            n=self.n,
            ml=list(self.ml),
            msl=list(self.msl),
            mt=self.mt,
            mst=self.mst,
            me=Counter(self.me),
            seq=self.seq,
        )

    def to_payload(self) -> dict:
        return {
            "n": self.n,
            "ml": list(self.ml),
            "msl": list(self.msl),
            "mt": self.mt,
            "mst": self.mst,
            "me": dict(sorted(self.me.items())),
            "seq": self.seq,
        }

    @classmethod
    def from_payload(cls, raw: Mapping) -> "TweetCluster":
        return cls(
            n=raw["n"],
            ml=list(raw["ml"]),
            msl=list(raw["msl"]),
            mt=raw["mt"],
            mst=raw["mst"],
            me=Counter(raw["me"]),
            seq=raw["seq"],
        )


@dataclass
class Snapshot:
    """Frozen copy of the active set taken at a pyramid tick."""

    tick: int
    clusters: list[TweetCluster]


class PyramidTimeline:
    """Active cluster set plus order-indexed historical snapshots.

    Absorb rule: a tweet joins the closest active cluster when within its
    boundary (boundary_factor * spatial std for n >= 2, the fixed singleton
    radius for n = 1), else it seeds a new cluster. When the active set
    exceeds max_active, stale clusters (older than stale_age_s and smaller
    than stale_min_n) are deleted first, then closest pairs merge until the
    cap holds.

    Snapshots: a snapshot at tick t is stored at order i, the largest i with
    frame_base^i dividing t; each order retains the newest frame_base^
    frame_order_cap + 1 snapshots. Retrieval returns the stored snapshot
    with the largest tick not exceeding the query.
    """

    def __init__(self, cfg: TimelineConfig) -> None:
        self.cfg = cfg
        self.active: list[TweetCluster] = []
        self._next_seq = 0
        # order -> snapshots, oldest first
        self._orders: dict[int, list[Snapshot]] = {}

    # --- active set -----------------------------------------------------

    def _boundary_m(self, tc: TweetCluster) -> float:
        if tc.n == 1:
            return self.cfg.singleton_radius_m
        return self.cfg.boundary_factor * tc.spatial_std_m()

    def _center_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lats = np.array([tc.ml[0] / tc.n for tc in self.active], dtype=np.float64)
        lons = np.array([tc.ml[1] / tc.n for tc in self.active], dtype=np.float64)
        return lats, lons

    def update(self, tweet: Tweet) -> TweetCluster:
        """Absorb one tweet, maintaining the cap. `tweet.timestamp` is the
        clock for staleness. Returns the cluster that received the tweet."""
        target: TweetCluster | None = None
        dmin = math.inf
        if self.active:
            lats, lons = self._center_arrays()
            d = haversine_m_many(lats, lons, tweet.lat, tweet.lon)
            dmin = float(d.min())
            # distance ties go to the oldest cluster
            at_min = np.flatnonzero(d == dmin)
            target = min((self.active[int(i)] for i in at_min), key=lambda tc: tc.seq)
        if target is not None and dmin <= self._boundary_m(target):
            target.absorb(tweet)
            received = target
        else:
            received = TweetCluster(seq=self._next_seq)
            self._next_seq += 1
            received.absorb(tweet)
            self.active.append(received)
        self._enforce_cap(now=tweet.timestamp)
        return received

    def _enforce_cap(self, now: int) -> None:
        if len(self.active) <= self.cfg.max_active:
            return
        kept = []
        for tc in self.active:
            age = now - tc.mean_timestamp()
            if age > self.cfg.stale_age_s and tc.n < self.cfg.stale_min_n:
                continue
            kept.append(tc)
        self.active = kept
        while len(self.active) > self.cfg.max_active:
            self._merge_closest_pair()

    def _merge_closest_pair(self) -> None:
        # all-pairs distance matrix; the cap keeps the matrix small
        lats, lons = self._center_arrays()
        p = np.radians(lats)
        dl = np.radians(lons)[None, :] - np.radians(lons)[:, None]
        a = (
            np.sin((p[None, :] - p[:, None]) / 2.0) ** 2
            + np.cos(p)[:, None] * np.cos(p)[None, :] * np.sin(dl / 2.0) ** 2
        )
        dist = 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))
        dist[np.tril_indices(len(self.active))] = math.inf
        dmin = dist.min()
        # distance ties break to the pair with the lexically smallest
        # (seq_i, seq_j); list positions never matter
        ii, jj = np.nonzero(dist == dmin)
        i, j = min(
            zip(ii.tolist(), jj.tolist()),
            key=lambda ij: (self.active[ij[0]].seq, self.active[ij[1]].seq),
        )
        merged = TweetCluster.merge(self.active[i], self.active[j])
        self.active = [tc for k, tc in enumerate(self.active) if k not in (i, j)]
        self.active.append(merged)

    # --- pyramid snapshots ------------------------------------------------

    def _order_of(self, tick: int) -> int:
        if tick <= 0:
            raise ValueError("ticks start at 1")
        a = self.cfg.frame_base
        order = 0
        while tick % a == 0:
            tick //= a
            order += 1
        return order

    def snapshot(self, tick: int) -> None:
        """Record a frozen copy of the active set at this tick."""
        order = self._order_of(tick)
        store = self._orders.setdefault(order, [])
        store.append(Snapshot(tick=tick, clusters=[tc.copy() for tc in self.active]))
        cap = self.cfg.frame_base**self.cfg.frame_order_cap + 1
        while len(store) > cap:
            store.pop(0)

    def retrieve_snapshot(self, tick: int) -> Snapshot | None:
        """Newest stored snapshot with tick <= the query, or None."""
        best: Snapshot | None = None
        for store in self._orders.values():
            for snap in store:
                if snap.tick <= tick and (best is None or snap.tick > best.tick):
                    best = snap
        return best

    def stored_count(self) -> int:
        return sum(len(s) for s in self._orders.values())

    def stored_ticks(self) -> list[int]:
        out = []
        for store in self._orders.values():
            out.extend(s.tick for s in store)
        return sorted(out)

    # --- persistence -------------------------------------------------------

    def to_payload(self) -> dict:
        return {
            "next_seq": self._next_seq,
            "active": [tc.to_payload() for tc in self.active],
            "orders": {
                str(order): [
                    {"tick": s.tick, "clusters": [tc.to_payload() for tc in s.clusters]}
                    for s in store
                ]
                for order, store in sorted(self._orders.items())
            },
        }

    def load_payload(self, raw: Mapping) -> None:
        self._next_seq = raw["next_seq"]
        self.active = [TweetCluster.from_payload(r) for r in raw["active"]]
        self._orders = {
            int(order): [
                Snapshot(
                    tick=s["tick"],
                    clusters=[TweetCluster.from_payload(c) for c in s["clusters"]],
                )
                for s in store
            ]
            for order, store in raw["orders"].items()
        }


def estimate_occurrences(
    snapshot: Snapshot | None,
    keyword: str,
    lat: float,
    lon: float,
    bandwidth_m: float,
) -> float:
    """Kernel-weighted historical occurrence mass of a keyword near a point.

    Sums cluster keyword counts weighted by the parabolic kernel of the
    distance from the query point to each cluster center. Iteration is in
    cluster sequence order so the float sum is reproducible.
    """
    if snapshot is None:
        return 0.0
    acc = 0.0
    for tc in sorted(snapshot.clusters, key=lambda c: c.seq):
        cnt = tc.me.get(keyword)
        if not cnt:
            continue
        clat, clon = tc.center()
        k = epanechnikov(haversine_m(lat, lon, clat, clon), bandwidth_m)
        if k > 0.0:
            acc += cnt * k
    return acc
