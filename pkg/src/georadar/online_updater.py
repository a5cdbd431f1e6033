"""Incremental detector state across window shifts.

The contract: after apply_diff / find_mutated / refresh_events, the state is
bit-identical to a from-scratch batch construction over the new window with
the same scorer cache. Three facts make that hold:

- pair scores are pure given the vicinity cache, and cache staleness is a
  pure predicate of the frozen-in-shift graph, so recomputed values always
  equal batch values;
- tweets whose keywords' vicinities are due a rebuild are treated as dirty
  sources, so no retained authority embeds a superseded vicinity;
- every retained float was produced by the same sorted-order summation the
  batch path uses.

The reverse index is maintained as the exact transpose of the neighborhood
relation at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .candidate_generator import (
    CandidateEvent,
    PairScores,
    authority,
    form_candidates,
    local_pivot,
    resolve_pivots,
    seek_pivots,
)
from .classifier import FeatureVector
from .config import ClusterConfig
from .geo import GridIndex, haversine_m
from .ingest import QueryWindow, WindowDiff
from .keyword_graph import SemanticScorer


@dataclass
class CandidateDecision:
    """Classifier verdict for one candidate; prob is None on cold start."""

    candidate: CandidateEvent
    features: FeatureVector | None
    prob: float | None
    is_event: bool


@dataclass
class DetectorState:
    window: QueryWindow
    grid: GridIndex
    neighbors: dict[str, set[str]]
    rev: dict[str, set[str]]
    authorities: dict[str, float]
    local: dict[str, str]
    candidates: list[CandidateEvent] = field(default_factory=list)
    # tweets whose neighborhood membership changed in the last apply_diff;
    # they must be visited by find_mutated even if their authority value
    # came out bit-identical
    _pending_visit: set[str] = field(default_factory=set)

    def check_transpose(self) -> bool:
        """Exact-transpose invariant between neighbors and rev."""
        fwd = {(d, m) for d, ms in self.neighbors.items() for m in ms}
        bwd = {(d, m) for m, ds in self.rev.items() for d in ds}
        return fwd == bwd


def build_state(
    window: QueryWindow, scorer: SemanticScorer, cfg: ClusterConfig
) -> DetectorState:
    """From-scratch construction; also the reference the updater must match."""
    neighbors, authorities, local, grid = seek_pivots(window, scorer, cfg)
    rev: dict[str, set[str]] = {tid: set() for tid in neighbors}
    for d, members in neighbors.items():
        for m in members:
            rev[m].add(d)
    return DetectorState(
        window=window,
        grid=grid,
        neighbors=neighbors,
        rev=rev,
        authorities=authorities,
        local=local,
    )


def apply_diff(
    state: DetectorState,
    new_window: QueryWindow,
    diff: WindowDiff,
    scorer: SemanticScorer,
    cfg: ClusterConfig,
) -> tuple[DetectorState, set[str]]:
    """Fold one window diff into the state.

    Returns the set of tweets whose authority value changed (insertions
    included). Tweets whose neighborhood membership changed without a value
    change are queued for find_mutated internally.
    """
    pairs = PairScores(scorer)
    state.window = new_window
    membership_dirty: set[str] = set()
    value_dirty: set[str] = set()

    # 1. drop removed tweets and their incidences
    removed_ids = {t.id for t in diff.removed}
    for rid in removed_ids:
        for d in state.rev.pop(rid, set()):
            if d in removed_ids:
                continue
            state.neighbors[d].discard(rid)
            membership_dirty.add(d)
        own = state.neighbors.pop(rid)
        for m in own:
            if m not in removed_ids:
                state.rev[m].discard(rid)
        state.authorities.pop(rid)
        state.local.pop(rid)
        state.grid.remove(rid)

    # 2. sources whose outgoing scores may have drifted: any surviving tweet
    # holding a keyword whose cached vicinity is due a rebuild
    window_vocab = {
        kw for tid in state.neighbors for kw in new_window.tweets[tid].keywords
    }
    for t in diff.inserted:
        window_vocab.update(t.keywords)
    stale = scorer.stale_keywords(window_vocab)
    stale_sources = [
        tid
        for tid in sorted(state.neighbors)
        if stale and not stale.isdisjoint(new_window.tweets[tid].keywords)
    ]

    # 3. index insertions before any proximity scan
    inserted = sorted(diff.inserted, key=lambda t: t.id)
    for t in inserted:
        state.grid.add(t.id, t.lat, t.lon)

    # 4. re-evaluate outgoing pairs of stale sources against surviving targets
    for sid in stale_sources:
        src = new_window.tweets[sid]
        value_dirty.add(sid)  # its own self-score term moved with the rebuild
        for cid in sorted(set(state.grid.nearby(src.lat, src.lon))):
            if cid == sid or cid not in state.neighbors:
                continue  # insertions are built from scratch below
            tgt = new_window.tweets[cid]
            if haversine_m(src.lat, src.lon, tgt.lat, tgt.lon) >= cfg.bandwidth_m:
                continue
            member_now = pairs.score(src, tgt) > cfg.semantic_threshold
            member_was = sid in state.neighbors[cid]
            if member_now != member_was:
                if member_now:
                    state.neighbors[cid].add(sid)
                    state.rev.setdefault(sid, set()).add(cid)
                else:
                    state.neighbors[cid].discard(sid)
                    state.rev[sid].discard(cid)
                membership_dirty.add(cid)
            elif member_now:
                value_dirty.add(cid)

    # 5. fresh neighborhoods for insertions; their outgoing influence on
    # pre-existing tweets is folded in here too
    for t in inserted:
        members = {t.id}
        for cid in sorted(set(state.grid.nearby(t.lat, t.lon))):
            if cid == t.id:
                continue
            other = new_window.tweets[cid]
            if haversine_m(other.lat, other.lon, t.lat, t.lon) >= cfg.bandwidth_m:
                continue
            if pairs.score(other, t) > cfg.semantic_threshold:
                members.add(cid)
            if cid in state.neighbors:  # pre-existing target gains an edge?
                if pairs.score(t, other) > cfg.semantic_threshold:
                    state.neighbors[cid].add(t.id)
                    state.rev.setdefault(t.id, set()).add(cid)
                    membership_dirty.add(cid)
        state.neighbors[t.id] = members
        for m in members:
            state.rev.setdefault(m, set()).add(t.id)
        state.rev.setdefault(t.id, set())
        value_dirty.add(t.id)

    # 6. recompute authorities over the final neighborhoods
    changed: set[str] = set()
    for tid in sorted(membership_dirty | value_dirty):
        if tid not in state.neighbors:
            continue
        fresh = authority(
            new_window, new_window.tweets[tid], state.neighbors[tid], pairs, cfg.bandwidth_m
        )
        old = state.authorities.get(tid)
        if old is None or old != fresh:
            changed.add(tid)
        state.authorities[tid] = fresh

    state._pending_visit = {d for d in membership_dirty if d in state.neighbors}
    return state, changed


def find_mutated(state: DetectorState, changed: set[str]) -> set[str]:
    """Re-derive local pivots where they could have moved; return the tweets
    whose local pivot actually differs (insertions always mutate)."""
    visit = set(state._pending_visit)
    state._pending_visit = set()
    for cid in changed:
        visit.update(state.rev.get(cid, ()))
    visit.update(changed)
    mutated: set[str] = set()
    for tid in sorted(visit):
        if tid not in state.neighbors:
            continue
        fresh = local_pivot(state.neighbors[tid], state.authorities)
        if state.local.get(tid) != fresh:
            state.local[tid] = fresh
            mutated.add(tid)
    return mutated


def refresh_events(
    state: DetectorState,
    mutated: set[str],
    created_at: int,
    min_support: int,
    classify_fn: Callable[[CandidateEvent], CandidateDecision],
) -> list[CandidateDecision]:
    """Regroup candidates after an update and classify every candidate.

    Pivot resolution restarts from the full local-pivot map (path-compressed,
    linear) rather than only from `mutated`; the mutated set is what callers
    use for reporting, and correctness never depends on it being tight.
    Classification context (history snapshot, embeddings) moves every shift,
    so decisions are always recomputed.
    """
    del mutated  # informational for callers; regrouping is cheap and total
    pivot_of = resolve_pivots(state.local)
    state.candidates = form_candidates(state.window, pivot_of, min_support, created_at)
    return [classify_fn(c) for c in state.candidates]
