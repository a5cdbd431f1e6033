"""Candidate generation by local authority ascent.

Each tweet's neighborhood is the set of window tweets that influence it both
geographically (inside the kernel bandwidth) and semantically (pair score
above a threshold), itself always included. A tweet's authority sums those
influences; its local pivot is the highest-authority neighbor, ties to the
smaller id. Following local pivots strictly climbs (authority, -id), so the
walk reaches a fixed point in at most |window| hops; tweets sharing a fixed
point form one candidate.

Every float accumulation here iterates in sorted-id order, which makes the
batch path bit-identical to the incremental path and to itself across runs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

from .config import ClusterConfig
from .geo import GridIndex, epanechnikov, haversine_m
from .ingest import QueryWindow, Tweet
from .keyword_graph import SemanticScorer


def geographic_influence(source: Tweet, target: Tweet, bandwidth_m: float) -> float:
    """Kernel influence of one tweet on another; positive iff closer than
    the bandwidth."""
    return epanechnikov(
        haversine_m(source.lat, source.lon, target.lat, target.lon), bandwidth_m
    )


class PairScores:
    """Per-shift memo of semantic pair scores (graph is frozen in a shift)."""

    def __init__(self, scorer: SemanticScorer) -> None:
        self.scorer = scorer
        self._memo: dict[tuple[str, str], float] = {}

    def score(self, source: Tweet, target: Tweet) -> float:
        key = (source.id, target.id)
        got = self._memo.get(key)
        if got is None:
            got = self.scorer.score(source, target)
            self._memo[key] = got
        return got


def build_grid(window: QueryWindow, bandwidth_m: float) -> GridIndex:
    grid = GridIndex(bandwidth_m)
    for tid in window.sorted_ids():
        t = window.tweets[tid]
        grid.add(tid, t.lat, t.lon)
    return grid


def neighborhood(
    window: QueryWindow,
    tweet: Tweet,
    grid: GridIndex,
    pairs: PairScores,
    cfg: ClusterConfig,
) -> set[str]:
    """Ids of window tweets influencing `tweet`: inside the bandwidth and
    with semantic score above the threshold. The tweet itself is always a
    member, whatever its self-score."""
    members = {tweet.id}
    for cid in sorted(set(grid.nearby(tweet.lat, tweet.lon))):
        if cid == tweet.id:
            continue
        cand = window.tweets[cid]
        if (
            haversine_m(cand.lat, cand.lon, tweet.lat, tweet.lon) < cfg.bandwidth_m
            and pairs.score(cand, tweet) > cfg.semantic_threshold
        ):
            members.add(cid)
    return members


def authority(
    window: QueryWindow,
    tweet: Tweet,
    neighbor_ids: set[str],
    pairs: PairScores,
    bandwidth_m: float,
) -> float:
    """Total geo-semantic influence received from the neighborhood, summed
    in id order."""
    acc = 0.0
    for nid in sorted(neighbor_ids):
        src = window.tweets[nid]
        acc += geographic_influence(src, tweet, bandwidth_m) * pairs.score(src, tweet)
    return acc


def local_pivot(neighbor_ids: set[str], authorities: dict[str, float]) -> str:
    """Highest-authority neighbor; ties break to the smaller id."""
    best: str | None = None
    for nid in sorted(neighbor_ids):
        if best is None or authorities[nid] > authorities[best]:
            best = nid
    assert best is not None, "neighborhoods are never empty"
    return best


def resolve_pivots(local: dict[str, str]) -> dict[str, str]:
    """Fixed point of the local-pivot map for every tweet.

    Follows l(d) with memoization; strictly increasing (authority, -id) along
    the walk guarantees termination without cycle checks.
    """
    root: dict[str, str] = {}
    for start in sorted(local):
        path = []
        cur = start
        while cur not in root:
            nxt = local[cur]
            if nxt == cur:
                root[cur] = cur
                break
            path.append(cur)
            cur = nxt
        r = root[cur]
        for p in path:
            root[p] = r
    return root


@dataclass(frozen=True)
class CandidateEvent:
    """A pivot tweet with every window tweet whose ascent ends at it."""

    pivot: Tweet
    members: tuple[Tweet, ...]  # id-sorted, includes the pivot
    created_at: int

    @cached_property
    def member_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.members)

    @cached_property
    def keyword_counts(self) -> Counter:
        counts: Counter = Counter()
        for m in self.members:
            counts.update(m.keywords)
        return counts

    def signature(self) -> tuple[str, tuple[str, ...]]:
        return (self.pivot.id, self.member_ids)


def form_candidates(
    window: QueryWindow,
    pivot_of: dict[str, str],
    min_support: int,
    created_at: int,
) -> list[CandidateEvent]:
    """Group window tweets by their resolved pivot; keep groups meeting the
    support floor. Output sorted by pivot id."""
    groups: dict[str, list[str]] = {}
    for tid in sorted(pivot_of):
        groups.setdefault(pivot_of[tid], []).append(tid)
    out = []
    for pid in sorted(groups):
        member_ids = groups[pid]
        if len(member_ids) < min_support:
            continue
        out.append(
            CandidateEvent(
                pivot=window.tweets[pid],
                members=tuple(window.tweets[m] for m in member_ids),
                created_at=created_at,
            )
        )
    return out


def seek_pivots(
    window: QueryWindow, scorer: SemanticScorer, cfg: ClusterConfig
) -> tuple[dict[str, set[str]], dict[str, float], dict[str, str], GridIndex]:
    """Batch construction: neighborhoods, authorities, and local pivots for
    every window tweet. Returns (neighbors, authorities, local, grid)."""
    grid = build_grid(window, cfg.bandwidth_m)
    pairs = PairScores(scorer)
    neighbors: dict[str, set[str]] = {}
    for tid in window.sorted_ids():
        neighbors[tid] = neighborhood(window, window.tweets[tid], grid, pairs, cfg)
    authorities: dict[str, float] = {}
    for tid in window.sorted_ids():
        authorities[tid] = authority(
            window, window.tweets[tid], neighbors[tid], pairs, cfg.bandwidth_m
        )
    local: dict[str, str] = {}
    for tid in window.sorted_ids():
        local[tid] = local_pivot(neighbors[tid], authorities)
    return neighbors, authorities, local, grid
