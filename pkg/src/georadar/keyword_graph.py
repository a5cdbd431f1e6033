"""Keyword co-occurrence graph and random-walk-with-restart vicinities.

The graph is cumulative over the whole stream: undirected, integer weights,
one increment per unordered pair of distinct keywords per tweet. Vicinities
(approximate restart-walk score vectors) are computed by residual pushing
and memoized per keyword; a cached vicinity is reused until the incident
edge weights drift past a relative threshold, at which point it is rebuilt
on next use. Validity is a pure function of the build-time snapshot and the
current graph, so any two evaluation orders see identical values.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .ingest import Tweet


class IsolatedKeywordError(ValueError):
    """Raised for operations undefined on zero-strength keywords."""


@dataclass(frozen=True)
class Vicinity:
    """Approximate restart-walk scores from a source keyword.

    Every node with positive accumulated score is present, the source always
    included. Scores underestimate the exact stationary solution and sum to
    at most 1.
    """

    source: str
    scores: dict[str, float]


class _AdjacencyArrays:
    """Flat directed-edge view of the graph in canonical node order.

    nodes are sorted; each undirected edge appears once per direction. Kept
    immutable and swapped wholesale when the graph version moves, so every
    vicinity computation over one graph state sums floats in the same order.
    """

    def __init__(self, adj: dict[str, dict[str, int]], strength: dict[str, int]):
        self.nodes: list[str] = sorted(strength)
        self.index: dict[str, int] = {k: i for i, k in enumerate(self.nodes)}
        src: list[int] = []
        dst: list[int] = []
        wts: list[int] = []
        for u in self.nodes:
            ui = self.index[u]
            nbrs = adj[u]
            for v in sorted(nbrs):
                src.append(ui)
                dst.append(self.index[v])
                wts.append(nbrs[v])
        self.src = np.array(src, dtype=np.int64)
        self.dst = np.array(dst, dtype=np.int64)
        self.weight = np.array(wts, dtype=np.float64)
        self.strength = np.array([strength[u] for u in self.nodes], dtype=np.float64)


class KeywordGraph:
    """Undirected integer-weighted co-occurrence graph."""

    def __init__(self) -> None:
        self._adj: dict[str, dict[str, int]] = {}
        self._strength: dict[str, int] = {}
        self._version = 0
        self._arrays: _AdjacencyArrays | None = None
        self._arrays_version = -1

    def __contains__(self, keyword: str) -> bool:
        return keyword in self._strength

    def __len__(self) -> int:
        return len(self._strength)

    def nodes(self) -> Iterable[str]:
        return self._strength.keys()

    def strength(self, keyword: str) -> int:
        """Sum of incident edge weights (0 for isolated keywords)."""
        return self._strength[keyword]

    def weight(self, u: str, v: str) -> int:
        return self._adj.get(u, {}).get(v, 0)

    def neighbors(self, u: str) -> Mapping[str, int]:
        return self._adj.get(u, {})

    def _touch(self, keyword: str) -> None:
        if keyword not in self._strength:
            self._strength[keyword] = 0
            self._adj[keyword] = {}

    def observe_tweet(self, tweet: Tweet) -> None:
        """Add one tweet: +1 to every unordered pair of distinct keywords;
        lone keywords still register as isolated nodes."""
        self._version += 1
        distinct = sorted(set(tweet.keywords))
        for kw in distinct:
            self._touch(kw)
        for i, u in enumerate(distinct):
            for v in distinct[i + 1 :]:
                au = self._adj[u]
                av = self._adj[v]
                au[v] = au.get(v, 0) + 1
                av[u] = av.get(u, 0) + 1
                self._strength[u] += 1
                self._strength[v] += 1

    def adjacency_arrays(self) -> _AdjacencyArrays:
        """Canonical flat adjacency, rebuilt when the graph has changed."""
        if self._arrays is None or self._arrays_version != self._version:
            self._arrays = _AdjacencyArrays(self._adj, self._strength)
            self._arrays_version = self._version
        return self._arrays

    def transition_probability(self, u: str, v: str) -> float:
        """Walk step probability from u to v: weight(u,v) / strength(u)."""
        if u not in self._strength:
            raise KeyError(f"unknown keyword {u!r}")
        su = self._strength[u]
        if su == 0:
            raise IsolatedKeywordError(f"keyword {u!r} has no edges")
        return self._adj[u].get(v, 0) / su

    def edge_list(self) -> list[tuple[str, str, int]]:
        """Canonically sorted (u < v) edge triples, for persistence."""
        out = []
        for u, nbrs in self._adj.items():
            for v, w in nbrs.items():
                if u < v:
                    out.append((u, v, w))
        out.sort()
        return out

    @classmethod
    def from_parts(
        cls, edges: Iterable[tuple[str, str, int]], isolated: Iterable[str]
    ) -> "KeywordGraph":
        g = cls()
        for u, v, w in edges:
            g._touch(u)
            g._touch(v)
            g._adj[u][v] = w
            g._adj[v][u] = w
            g._strength[u] += w
            g._strength[v] += w
        for kw in isolated:
            g._touch(kw)
        return g

    def isolated_nodes(self) -> list[str]:
        return sorted(k for k, s in self._strength.items() if s == 0)


def approximate_rwr(
    graph: KeywordGraph, source: str, restart_prob: float, epsilon: float
) -> Vicinity:
    """Residual-push approximation of restart-walk scores from `source`.

    Pushing is synchronized over rounds: each round, every node's residual
    spreads (1 - restart_prob) of itself to neighbors in proportion to
    transition probability and is accumulated into score and residual on
    arrival; isolated nodes drop their mass. Rounds run while the total
    outstanding residual exceeds restart_prob * epsilon, which bounds every
    node's absolute error by epsilon, and accumulate-on-arrival keeps scores
    from ever overestimating the exact solution. With epsilon >= 1 the loop
    body never runs and the vicinity is exactly {source: restart_prob}.
    """
    if source not in graph:
        raise KeyError(f"unknown keyword {source!r}")
    if not (0.0 < restart_prob < 1.0):
        raise ValueError("restart probability must be in (0, 1)")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    arrays = graph.adjacency_arrays()
    n = len(arrays.nodes)
    qi = arrays.index[source]
    score = np.zeros(n)
    residual = np.zeros(n)
    score[qi] = restart_prob
    residual[qi] = restart_prob
    total = restart_prob
    stop = restart_prob * epsilon
    decay = 1.0 - restart_prob
    safe_strength = np.maximum(arrays.strength, 1.0)
    while total > stop:
        factor = np.where(arrays.strength > 0.0, decay * residual / safe_strength, 0.0)
        contrib = factor[arrays.src] * arrays.weight
        arriving = np.bincount(arrays.dst, weights=contrib, minlength=n)
        score += arriving
        residual = arriving
        total = float(arriving.sum())
    scores: dict[str, float] = {}
    for i in np.flatnonzero(score > 0.0):
        scores[arrays.nodes[int(i)]] = float(score[int(i)])
    return Vicinity(source=source, scores=scores)


@dataclass
class _CacheEntry:
    vicinity: Vicinity
    built_strength: int
    built_edges: dict[str, int]
    checked_at: int = -1  # strength at last validity verdict, -1 before any
    checked_at_valid: bool = True

    def to_payload(self) -> dict:
        return {
            "scores": self.vicinity.scores,
            "built_strength": self.built_strength,
            "built_edges": self.built_edges,
        }

    @classmethod
    def from_payload(cls, source: str, raw: Mapping) -> "_CacheEntry":
        return cls(
            vicinity=Vicinity(source=source, scores=dict(raw["scores"])),
            built_strength=raw["built_strength"],
            built_edges=dict(raw["built_edges"]),
            checked_at=-1,
        )


class SemanticScorer:
    """Vicinity cache plus tweet-to-tweet semantic scoring.

    A cached vicinity stays valid while its source keyword has no new
    incident neighbor and no incident edge whose weight grew by more than
    `cache_drift` relative to the build-time snapshot. The verdict is
    memoized per (keyword, current strength): strengths only grow, so equal
    strength means untouched incidences.
    """

    def __init__(
        self,
        graph: KeywordGraph,
        restart_prob: float = 0.2,
        epsilon: float = 1e-4,
        cache_drift: float = 0.10,
    ) -> None:
        self.graph = graph
        self.restart_prob = restart_prob
        self.epsilon = epsilon
        self.cache_drift = cache_drift
        self._cache: dict[str, _CacheEntry] = {}
        self.stats: Counter = Counter()

    def _entry_valid(self, keyword: str, entry: _CacheEntry) -> bool:
        cur = self.graph.strength(keyword)
        if cur == entry.built_strength:
            return True
        if cur == entry.checked_at:
            return entry.checked_at_valid
        nbrs = self.graph.neighbors(keyword)
        valid = True
        if len(nbrs) != len(entry.built_edges):
            valid = False
        else:
            for v, w in nbrs.items():
                w0 = entry.built_edges.get(v)
                if w0 is None or (w - w0) / w0 > self.cache_drift:
                    valid = False
                    break
        entry.checked_at = cur
        entry.checked_at_valid = valid
        return valid

    def is_stale(self, keyword: str) -> bool:
        """True iff a cached vicinity exists and would be rebuilt on use."""
        entry = self._cache.get(keyword)
        if entry is None:
            return False
        return not self._entry_valid(keyword, entry)

    def vicinity(self, keyword: str) -> Vicinity:
        entry = self._cache.get(keyword)
        if entry is not None and self._entry_valid(keyword, entry):
            self.stats["vicinity_hits"] += 1
            return entry.vicinity
        vic = approximate_rwr(self.graph, keyword, self.restart_prob, self.epsilon)
        self._cache[keyword] = _CacheEntry(
            vicinity=vic,
            built_strength=self.graph.strength(keyword),
            built_edges=dict(self.graph.neighbors(keyword)),
        )
        self.stats["vicinity_builds"] += 1
        return vic

    def score_counts(self, from_counts: Counter, to_counts: Counter) -> float:
        """Mean vicinity affinity between two keyword multisets.

        S = sum_u sum_v n_from(u) * n_to(v) * vic_u(v) / (|from| * |to|),
        sizes counted with multiplicity. Lies in [0, 1].
        """
        n_from = sum(from_counts.values())
        n_to = sum(to_counts.values())
        if n_from == 0 or n_to == 0:
            raise ValueError("semantic score needs nonempty keyword multisets")
        acc = 0.0
        to_items = sorted(to_counts.items())
        for u in sorted(from_counts):
            vic = self.vicinity(u).scores
            cu = from_counts[u]
            for v, cv in to_items:
                sv = vic.get(v)
                if sv is not None:
                    acc += cu * cv * sv
        return acc / (n_from * n_to)

    def score(self, from_tweet: Tweet, to_tweet: Tweet) -> float:
        return self.score_counts(from_tweet.keyword_counts, to_tweet.keyword_counts)

    def stale_keywords(self, keywords: Iterable[str]) -> set[str]:
        """Subset of `keywords` whose cached vicinity is due for a rebuild."""
        return {kw for kw in set(keywords) if self.is_stale(kw)}

    def clone(self) -> "SemanticScorer":
        """Cache-deep copy sharing the (frozen within a shift) graph, so a
        reference computation cannot perturb the live cache."""
        twin = SemanticScorer(
            self.graph,
            restart_prob=self.restart_prob,
            epsilon=self.epsilon,
            cache_drift=self.cache_drift,
        )
        twin._cache = {
            kw: _CacheEntry(
                vicinity=Vicinity(source=e.vicinity.source, scores=dict(e.vicinity.scores)),
                built_strength=e.built_strength,
                built_edges=dict(e.built_edges),
            )
            for kw, e in self._cache.items()
        }
        return twin

    def cache_snapshot(self) -> dict[str, _CacheEntry]:
        """Shallow copy of the cache map. Entries are replaced, never edited,
        on rebuild, so sharing them across scorers on the same graph is safe;
        the validity memo they carry is a pure function of the graph."""
        return dict(self._cache)

    def with_cache(self, cache: Mapping[str, _CacheEntry]) -> "SemanticScorer":
        """Twin scorer over the same graph, seeded with a cache snapshot."""
        twin = SemanticScorer(
            self.graph,
            restart_prob=self.restart_prob,
            epsilon=self.epsilon,
            cache_drift=self.cache_drift,
        )
        twin._cache = dict(cache)
        return twin

    def cache_payload(self) -> dict:
        return {kw: e.to_payload() for kw, e in sorted(self._cache.items())}

    def load_cache(self, payload: Mapping) -> None:
        self._cache = {
            kw: _CacheEntry.from_payload(kw, raw) for kw, raw in payload.items()
        }
