"""The detection engine: drives the per-shift pipeline over a replayed
stream and owns every piece of long-lived state.

Shift order matters and is fixed:
1. slide the window, collect the diff;
2. fold insertions into the co-occurrence graph (graph is frozen for the
   rest of the shift);
3. one embedding training step on the insertions (plus cache replay);
4. incremental detection: apply_diff / find_mutated / refresh_events,
   classifying against the newest history snapshot fully older than the
   window;
5. fold insertions into the activity timeline and take the pyramid snapshot
   for this tick.

History therefore never includes the window being judged, and the batch
reference (`batch_reference`) sees exactly the same frozen context.
"""

from __future__ import annotations

import os
import time
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .candidate_generator import CandidateEvent
from .classifier import FeatureContext, LogRegModel, classify, extract_features
from .config import EngineConfig
from .embedding import EmbeddingModel
from .events import EventQuery, EventRecord, EventStore, rank_keywords
from .ingest import (
    QueryWindow,
    StreamCursor,
    Tweet,
    WindowDiff,
    advance_window,
    load_stopwords,
)
from .keyword_graph import KeywordGraph, SemanticScorer
from .online_updater import (
    CandidateDecision,
    DetectorState,
    apply_diff,
    build_state,
    find_mutated,
    refresh_events,
)
from .persist import read_state_file, write_state_file
from .summarizer import PyramidTimeline

CandidateHook = Callable[[CandidateEvent, "object", int], None]


@dataclass
class ShiftResult:
    tick: int
    window_start: int
    window_end: int
    window_size: int
    removed: int
    inserted: int
    churn: float
    candidates: int
    events: int
    detect_seconds: float
    total_seconds: float


class DetectionEngine:
    def __init__(
        self,
        cfg: EngineConfig | None = None,
        model: LogRegModel | None = None,
        stopwords: frozenset[str] | None = None,
    ) -> None:
        self.cfg = cfg if cfg is not None else EngineConfig()
        self.stopwords = (
            stopwords if stopwords is not None else load_stopwords(self.cfg.stopwords_path)
        )
        self.graph = KeywordGraph()
        self.scorer = SemanticScorer(
            self.graph,
            restart_prob=self.cfg.graph.restart_prob,
            epsilon=self.cfg.graph.epsilon,
            cache_drift=self.cfg.graph.cache_drift,
        )
        self.embedding = EmbeddingModel(self.cfg.embedding)
        self.timeline = PyramidTimeline(self.cfg.timeline)
        self.model = model
        self.store = EventStore()
        self.window: QueryWindow | None = None
        self.state: DetectorState | None = None
        self.tick = 0
        self.next_event_id = 1
        self.counters: Counter = Counter()
        self.shift_log: list[ShiftResult] = []
        self.candidate_hook: CandidateHook | None = None
        self._cursor: StreamCursor | None = None
        self._stream_path: str | None = None
        # frozen classification context of the last processed shift, plus the
        # scorer cache as it stood before that shift's detection pass; both
        # exist so the batch reference replays the same work the incremental
        # pass did
        self._ctx: FeatureContext | None = None
        self._ctx_cache: dict | None = None

    # --- shift pipeline ---------------------------------------------------

    def _ensure_window(self, first_ts: int) -> None:
        if self.window is None:
            self.window = QueryWindow.empty(first_ts, self.cfg.window_s)
            self.state = build_state(self.window, self.scorer, self.cfg.cluster)

    def _decide(
        self,
        candidate: CandidateEvent,
        ctx: FeatureContext | None,
        run_hook: bool,
    ) -> CandidateDecision:
        if ctx is None:
            self.counters["cold_start_candidates"] += run_hook
            return CandidateDecision(
                candidate=candidate,
                features=None,
                prob=None,
                is_event=self.cfg.classifier.default_decision,
            )
        features = extract_features(
            members=candidate.members,
            pivot=candidate.pivot,
            ctx=ctx,
            embedding=self.embedding,
            bandwidth_m=self.cfg.cluster.bandwidth_m,
        )
        if run_hook and self.candidate_hook is not None:
            self.candidate_hook(candidate, features, self.window.end)
        if self.model is None:
            return CandidateDecision(candidate, features, None, False)
        prob, is_event = classify(self.model, features, self.cfg.classifier.threshold)
        return CandidateDecision(candidate, features, prob, is_event)

    def process_shift(self, new_end: int, buffered: Sequence[Tweet]) -> ShiftResult:
        assert self.window is not None and self.state is not None
        t_total = time.perf_counter()
        new_window, diff = advance_window(self.window, new_end, buffered)
        late = sum(1 for t in buffered if t.timestamp < new_window.start)
        if late:
            self.counters["late_dropped"] += late
        self.window = new_window
        self.counters["tweets_ingested"] += len(diff.inserted)

        for t in diff.inserted:
            self.graph.observe_tweet(t)
        self.embedding.train_step(diff.inserted)

        self.tick += 1
        snapshot = self.timeline.retrieve_snapshot(self.tick - self.cfg.history_lag_ticks)
        ctx = (
            FeatureContext(new_window, snapshot, self.embedding)
            if snapshot is not None
            else None
        )
        self._ctx = ctx
        self._ctx_cache = self.scorer.cache_snapshot()

        t_detect = time.perf_counter()
        _, changed = apply_diff(self.state, new_window, diff, self.scorer, self.cfg.cluster)
        mutated = find_mutated(self.state, changed)
        decisions = refresh_events(
            self.state,
            mutated,
            created_at=new_end,
            min_support=self.cfg.cluster.min_support,
            classify_fn=lambda c: self._decide(c, ctx, run_hook=True),
        )
        detect_seconds = time.perf_counter() - t_detect

        emitted = 0
        for dec in decisions:
            if dec.is_event:
                self._emit(dec, new_end)
                emitted += 1

        for t in diff.inserted:
            self.timeline.update(t)
        self.timeline.snapshot(self.tick)

        result = ShiftResult(
            tick=self.tick,
            window_start=new_window.start,
            window_end=new_window.end,
            window_size=len(new_window),
            removed=len(diff.removed),
            inserted=len(diff.inserted),
            churn=(len(diff.removed) + len(diff.inserted)) / max(1, len(new_window)),
            candidates=len(decisions),
            events=emitted,
            detect_seconds=detect_seconds,
            total_seconds=time.perf_counter() - t_total,
        )
        self.shift_log.append(result)
        self.counters["shifts"] += 1
        self.counters["events_emitted"] += emitted
        return result

    def _emit(self, dec: CandidateDecision, detected_at: int) -> None:
        c = dec.candidate
        times = [m.timestamp for m in c.members]
        record = EventRecord(
            event_id=self.next_event_id,
            pivot_id=c.pivot.id,
            lat=c.pivot.lat,
            lon=c.pivot.lon,
            t_start=min(times),
            t_end=max(times),
            keywords=rank_keywords(c.keyword_counts, self.cfg.classifier.top_keywords),
            score=dec.prob if dec.prob is not None else 0.5,
            member_ids=c.member_ids,
            detected_at=detected_at,
        )
        self.next_event_id += 1
        self.store.add(record, c.members)

    # --- batch reference ----------------------------------------------------

    def batch_reference(self) -> tuple[DetectorState, list[CandidateDecision], float]:
        """From-scratch state and decisions for the current window.

        Starts from the scorer cache as it stood before the last shift's
        detection pass, on a twin scorer, so the reference repeats the same
        vicinity rebuilds the incremental pass paid for without touching the
        live cache. Classification context is the just-processed shift's.
        """
        assert self.window is not None
        t0 = time.perf_counter()
        base = self._ctx_cache if self._ctx_cache is not None else self.scorer.cache_snapshot()
        scorer = self.scorer.with_cache(base)
        state = build_state(self.window, scorer, self.cfg.cluster)
        decisions = refresh_events(
            state,
            set(),
            created_at=self.window.end,
            min_support=self.cfg.cluster.min_support,
            classify_fn=lambda c: self._decide(c, self._ctx, run_hook=False),
        )
        return state, decisions, time.perf_counter() - t0

    def matches_batch(self) -> dict:
        """Exact comparison of live incremental state against the batch
        reference. Keys report each plane; 'identical' is the conjunction."""
        assert self.state is not None
        ref_state, ref_decisions, ref_seconds = self.batch_reference()
        live = self.state
        live_decisions = [
            self._decide(c, self._ctx, run_hook=False) for c in live.candidates
        ]
        planes = {
            "neighbors": live.neighbors == ref_state.neighbors,
            "authorities": live.authorities == ref_state.authorities,
            "local_pivots": live.local == ref_state.local,
            "candidates": [c.signature() for c in live.candidates]
            == [c.signature() for c in ref_state.candidates],
            "decisions": [(d.prob, d.is_event) for d in live_decisions]
            == [(d.prob, d.is_event) for d in ref_decisions],
            "transpose": live.check_transpose(),
        }
        planes["identical"] = all(planes.values())
        planes["batch_seconds"] = ref_seconds
        return planes

    # --- stream driving ------------------------------------------------------

    def run_stream(
        self,
        path: str | None = None,
        max_shifts: int | None = None,
        on_shift: Callable[[ShiftResult], None] | None = None,
    ) -> list[ShiftResult]:
        """Replay a stream file through the pipeline. With a persisted
        cursor (after load_state) the path may be omitted to continue the
        original stream."""
        if self._cursor is None:
            src = path if path is not None else self._stream_path
            if src is None:
                raise ValueError("no stream path given or persisted")
            self._stream_path = src
            self._cursor = StreamCursor(src, self.stopwords)
        elif path is not None and path != self._stream_path:
            self._cursor.close()
            self._stream_path = path
            self._cursor = StreamCursor(path, self.stopwords)
        cursor = self._cursor
        first = cursor.peek()
        if first is None and self.window is None:
            return []
        if self.window is None:
            assert first is not None
            self._ensure_window(first.timestamp)
        assert self.window is not None
        results = []
        while max_shifts is None or len(results) < max_shifts:
            if cursor.finished:
                break
            end = self.window.end + self.cfg.step_s
            buffered = cursor.take_until(end)
            result = self.process_shift(end, buffered)
            results.append(result)
            if on_shift is not None:
                on_shift(result)
        return results

    # --- queries -----------------------------------------------------------

    def query(self, q: EventQuery) -> list[EventRecord]:
        return self.store.query(q)

    def get_event(self, event_id: int) -> tuple[EventRecord, list[Tweet]] | None:
        record = self.store.get(event_id)
        if record is None:
            return None
        return record, self.store.members_of(record)

    def status(self) -> dict:
        last = self.shift_log[-1] if self.shift_log else None
        return {
            "tick": self.tick,
            "window": None
            if self.window is None
            else {
                "start": self.window.start,
                "end": self.window.end,
                "size": len(self.window),
            },
            "events": len(self.store),
            "vocabulary": len(self.graph),
            "active_clusters": len(self.timeline.active),
            "counters": dict(sorted(self.counters.items())),
            "stream": dict(sorted(self._cursor.stats.items())) if self._cursor else {},
            "last_shift": None
            if last is None
            else {
                "tick": last.tick,
                "window_end": last.window_end,
                "candidates": last.candidates,
                "events": last.events,
                "detect_seconds": last.detect_seconds,
                "total_seconds": last.total_seconds,
            },
        }

    # --- persistence -----------------------------------------------------------

    def save_state(self, directory: str) -> None:
        """Write the complete engine state. A load followed by another save
        produces byte-identical files."""
        assert self.window is not None and self.state is not None, "nothing to save"
        os.makedirs(directory, exist_ok=True)
        manifest = {
            "config": self.cfg.to_dict(),
            "tick": self.tick,
            "next_event_id": self.next_event_id,
            "counters": dict(sorted(self.counters.items())),
            "model": self.model.to_payload() if self.model else None,
            "stream": {
                "path": self._stream_path,
                "offset": self._cursor.offset if self._cursor else 0,
                "pending": (
                    self._cursor.pending.to_record()
                    if self._cursor and self._cursor.pending
                    else None
                ),
                "stats": dict(sorted(self._cursor.stats.items())) if self._cursor else {},
                "exhausted": bool(self._cursor.exhausted) if self._cursor else False,
            },
        }
        write_state_file(os.path.join(directory, "manifest.json"), "manifest", manifest)
        write_state_file(
            os.path.join(directory, "window.json"),
            "window",
            {
                "start": self.window.start,
                "end": self.window.end,
                "tweets": [
                    self.window.tweets[tid].to_record() for tid in self.window.sorted_ids()
                ],
            },
        )
        write_state_file(
            os.path.join(directory, "graph.json"),
            "graph",
            {
                "edges": [[u, v, w] for u, v, w in self.graph.edge_list()],
                "isolated": self.graph.isolated_nodes(),
            },
        )
        write_state_file(
            os.path.join(directory, "scorer.json"), "scorer", self.scorer.cache_payload()
        )
        write_state_file(
            os.path.join(directory, "detector.json"),
            "detector",
            {
                "neighbors": {
                    tid: sorted(ms) for tid, ms in sorted(self.state.neighbors.items())
                },
                "authorities": dict(sorted(self.state.authorities.items())),
                "local": dict(sorted(self.state.local.items())),
                "candidates_created_at": (
                    self.state.candidates[0].created_at if self.state.candidates else None
                ),
            },
        )
        write_state_file(
            os.path.join(directory, "timeline.json"), "timeline", self.timeline.to_payload()
        )
        write_state_file(
            os.path.join(directory, "embedding.json"),
            "embedding",
            self.embedding.to_payload(),
        )
        write_state_file(
            os.path.join(directory, "events.json"), "events", self.store.to_payload()
        )

    @classmethod
    def load_state(cls, directory: str) -> "DetectionEngine":
        manifest = read_state_file(os.path.join(directory, "manifest.json"), "manifest")
        cfg = EngineConfig.from_dict(manifest["config"])
        model = (
            LogRegModel.from_payload(manifest["model"]) if manifest["model"] else None
        )
        engine = cls(cfg=cfg, model=model)
        engine.tick = manifest["tick"]
        engine.next_event_id = manifest["next_event_id"]
        engine.counters = Counter(manifest["counters"])

        win = read_state_file(os.path.join(directory, "window.json"), "window")
        tweets = {rec["id"]: Tweet.from_record(rec) for rec in win["tweets"]}
        engine.window = QueryWindow(win["start"], win["end"], tweets)

        g = read_state_file(os.path.join(directory, "graph.json"), "graph")
        engine.graph = KeywordGraph.from_parts(
            [(u, v, w) for u, v, w in g["edges"]], g["isolated"]
        )
        engine.scorer = SemanticScorer(
            engine.graph,
            restart_prob=cfg.graph.restart_prob,
            epsilon=cfg.graph.epsilon,
            cache_drift=cfg.graph.cache_drift,
        )
        engine.scorer.load_cache(
            read_state_file(os.path.join(directory, "scorer.json"), "scorer")
        )

        det = read_state_file(os.path.join(directory, "detector.json"), "detector")
        neighbors = {tid: set(ms) for tid, ms in det["neighbors"].items()}
        rev: dict[str, set[str]] = {tid: set() for tid in neighbors}
        for d, members in neighbors.items():
            for m in members:
                rev[m].add(d)
        from .candidate_generator import build_grid, form_candidates, resolve_pivots

        state = DetectorState(
            window=engine.window,
            grid=build_grid(engine.window, cfg.cluster.bandwidth_m),
            neighbors=neighbors,
            rev=rev,
            authorities=dict(det["authorities"]),
            local=dict(det["local"]),
        )
        if det["candidates_created_at"] is not None:
            state.candidates = form_candidates(
                engine.window,
                resolve_pivots(state.local),
                cfg.cluster.min_support,
                det["candidates_created_at"],
            )
        engine.state = state

        engine.timeline.load_payload(
            read_state_file(os.path.join(directory, "timeline.json"), "timeline")
        )
        engine.embedding.load_payload(
            read_state_file(os.path.join(directory, "embedding.json"), "embedding")
        )
        engine.store = EventStore.from_payload(
            read_state_file(os.path.join(directory, "events.json"), "events")
        )

        stream = manifest["stream"]
        engine._stream_path = stream["path"]
        if stream["path"] is not None:
            pending = (
                Tweet.from_record(stream["pending"]) if stream["pending"] else None
            )
            engine._cursor = StreamCursor(
                stream["path"],
                engine.stopwords,
                offset=stream["offset"],
                pending=pending,
                stats=Counter(stream["stats"]),
            )
            engine._cursor.exhausted = stream["exhausted"]
        return engine
