"""Authority-ascent candidate generation against a gridless brute force.

The oracle recomputes neighborhoods over all pairs with the exact distance
predicate, authorities by id-ordered summation, and pivots by explicit
bounded walks, sharing no code with the production path except the distance
function and the scorer.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from georadar.candidate_generator import (
    PairScores,
    authority,
    form_candidates,
    geographic_influence,
    local_pivot,
    neighborhood,
    resolve_pivots,
    seek_pivots,
)
from georadar.config import ClusterConfig
from georadar.geo import epanechnikov, haversine_m
from georadar.ingest import QueryWindow, Tweet
from georadar.keyword_graph import KeywordGraph, SemanticScorer

WORDS = ["storm", "flood", "levee", "game", "goal", "music", "pier", "road"]


def random_window(seed, max_tweets=50):
    """Window plus a scorer whose graph saw the same tweets."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_tweets + 1))
    tweets = {}
    graph = KeywordGraph()
    for i in range(n):
        # two spatial hot spots plus scatter, so neighborhoods vary
        if rng.random() < 0.4:
            lat, lon = 40.70, -74.00
        elif rng.random() < 0.5:
            lat, lon = 40.72, -73.98
        else:
            lat, lon = 40.60 + 0.2 * rng.random(), -74.1 + 0.2 * rng.random()
        t = Tweet(
            id=f"t{i:04d}",
            user_id=f"u{int(rng.integers(0, 8))}",
            timestamp=10_000 + int(rng.integers(0, 600)),
            lat=lat + float(rng.normal(scale=0.003)),
            lon=lon + float(rng.normal(scale=0.003)),
            keywords=tuple(rng.choice(WORDS, size=int(rng.integers(1, 4)))),
        )
        tweets[t.id] = t
        graph.observe_tweet(t)
    window = QueryWindow(10_000, 10_600, tweets)
    scorer = SemanticScorer(graph, restart_prob=0.2, epsilon=1e-4)
    return window, scorer


def brute_force(window, scorer, cfg):
    """All-pairs reimplementation of seek_pivots without the grid."""
    pairs = PairScores(scorer)
    ids = window.sorted_ids()
    neighbors = {}
    for tid in ids:
        t = window.tweets[tid]
        members = {tid}
        for cid in ids:
            if cid == tid:
                continue
            c = window.tweets[cid]
            if (
                haversine_m(c.lat, c.lon, t.lat, t.lon) < cfg.bandwidth_m
                and pairs.score(c, t) > cfg.semantic_threshold
            ):
                members.add(cid)
        neighbors[tid] = members
    authorities = {}
    for tid in ids:
        t = window.tweets[tid]
        acc = 0.0
        for nid in sorted(neighbors[tid]):
            src = window.tweets[nid]
            geo = epanechnikov(
                haversine_m(src.lat, src.lon, t.lat, t.lon), cfg.bandwidth_m
            )
            acc += geo * pairs.score(src, t)
        authorities[tid] = acc
    local = {}
    for tid in ids:
        best = None
        for nid in sorted(neighbors[tid]):
            if best is None or authorities[nid] > authorities[best]:
                best = nid
        local[tid] = best
    return neighbors, authorities, local


CFG = ClusterConfig(bandwidth_m=2000.0, semantic_threshold=0.02, min_support=3)


class TestAgainstBruteForce:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=100_000))
    def test_seek_pivots_equals_brute_force(self, seed):
        window, scorer = random_window(seed)
        neighbors, authorities, local, _ = seek_pivots(window, scorer, CFG)
        bf_neighbors, bf_authorities, bf_local = brute_force(window, scorer.clone(), CFG)
        assert neighbors == bf_neighbors
        assert local == bf_local
        # id-ordered sums of identical terms: bit-equal
        assert authorities == bf_authorities

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=100_000))
    def test_ascent_terminates_within_window_size(self, seed):
        window, scorer = random_window(seed)
        _, authorities, local, _ = seek_pivots(window, scorer, CFG)
        pivot_of = resolve_pivots(local)
        n = len(window)
        for start in local:
            cur, hops = start, 0
            while local[cur] != cur:
                nxt = local[cur]
                # each hop strictly climbs (authority, -id)
                assert authorities[nxt] > authorities[cur] or (
                    authorities[nxt] == authorities[cur] and nxt < cur
                )
                cur = nxt
                hops += 1
                assert hops <= n
            assert pivot_of[start] == cur

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=100_000))
    def test_pivots_are_fixed_points_and_argmax(self, seed):
        window, scorer = random_window(seed)
        neighbors, authorities, local, _ = seek_pivots(window, scorer, CFG)
        pivot_of = resolve_pivots(local)
        for tid, p in pivot_of.items():
            assert local[p] == p  # fixed point
            # the immediate pivot is the neighborhood argmax, smaller id wins ties
            best = local[tid]
            for nid in neighbors[tid]:
                assert authorities[nid] < authorities[best] or (
                    authorities[nid] == authorities[best] and best <= nid
                )


class TestPrimitives:
    def test_geographic_influence_is_kernel_of_distance(self):
        a = Tweet("a", "u", 0, 40.70, -74.00, ("x1",))
        b = Tweet("b", "u", 0, 40.71, -74.00, ("x1",))
        d = haversine_m(a.lat, a.lon, b.lat, b.lon)
        assert geographic_influence(a, b, 2000.0) == epanechnikov(d, 2000.0)
        assert geographic_influence(a, b, 500.0) == 0.0

    def test_neighborhood_always_contains_self(self):
        window, scorer = random_window(17, max_tweets=10)
        from georadar.candidate_generator import build_grid

        grid = build_grid(window, CFG.bandwidth_m)
        pairs = PairScores(scorer)
        for tid in window.sorted_ids():
            nb = neighborhood(window, window.tweets[tid], grid, pairs, CFG)
            assert tid in nb

    def test_local_pivot_tie_breaks_to_smaller_id(self):
        auth = {"a": 1.0, "b": 1.0, "c": 0.5}
        assert local_pivot({"a", "b", "c"}, auth) == "a"
        assert local_pivot({"b", "c"}, auth) == "b"

    def test_resolve_pivots_compresses_chains(self):
        local = {"a": "b", "b": "c", "c": "c", "d": "c", "e": "e"}
        assert resolve_pivots(local) == {
            "a": "c",
            "b": "c",
            "c": "c",
            "d": "c",
            "e": "e",
        }


class TestFormCandidates:
    def test_groups_by_pivot_with_support_floor(self):
        window, scorer = random_window(23)
        _, _, local, _ = seek_pivots(window, scorer, CFG)
        pivot_of = resolve_pivots(local)
        for support in (1, 3, 5):
            cands = form_candidates(window, pivot_of, support, created_at=10_600)
            sizes = {}
            for tid, p in pivot_of.items():
                sizes[p] = sizes.get(p, 0) + 1
            want_pivots = sorted(p for p, n in sizes.items() if n >= support)
            assert [c.pivot.id for c in cands] == want_pivots
            for c in cands:
                assert list(c.member_ids) == sorted(c.member_ids)
                assert c.pivot.id in c.member_ids
                assert c.created_at == 10_600
                assert len(c.members) >= support

    def test_signature_and_keyword_counts(self):
        from georadar.candidate_generator import CandidateEvent

        t1 = Tweet("a", "u1", 0, 40.7, -74.0, ("x1", "x2"))
        t2 = Tweet("b", "u2", 5, 40.7, -74.0, ("x2",))
        cand = CandidateEvent(pivot=t1, members=(t1, t2), created_at=9)
        assert cand.signature() == ("a", ("a", "b"))
        assert cand.keyword_counts == {"x1": 1, "x2": 2}
