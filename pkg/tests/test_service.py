"""Engine persistence, resume equivalence, HTTP endpoints, and the CLI."""

import filecmp
import json
import os

import numpy as np
import pytest
from fastapi.testclient import TestClient

from georadar.api import create_app
from georadar.classifier import FEATURE_NAMES, LogRegModel
from georadar.config import ClusterConfig, EngineConfig
from georadar.engine import DetectionEngine
from georadar.cli import main
from georadar.persist import read_state_file
from georadar.synth import SynthConfig, generate_stream, write_stream

STATE_FILES = [
    "manifest.json",
    "window.json",
    "graph.json",
    "scorer.json",
    "detector.json",
    "timeline.json",
    "embedding.json",
    "events.json",
]


def small_config():
    return EngineConfig(
        window_s=3600,
        step_s=600,
        cluster=ClusterConfig(bandwidth_m=2000.0, semantic_threshold=0.02, min_support=3),
    )


def permissive_model():
    """Zero weights: probability exactly 0.5, at the default threshold every
    candidate is emitted. Exercises the emit path deterministically."""
    return LogRegModel(weights=np.zeros(len(FEATURE_NAMES)), bias=0.0)


@pytest.fixture(scope="module")
def stream_path(tmp_path_factory):
    cfg = SynthConfig(
        seed=9,
        duration_s=9000,
        bg_rate_per_h=80.0,
        vocab_size=20,
        words_per_tweet=3,
        n_bursts=1,
        burst_warmup_s=6000,
        burst_span_s=900,
        burst_tail_s=1000,
    )
    records, _ = generate_stream(cfg)
    path = tmp_path_factory.mktemp("streams") / "service.jsonl"
    write_stream(str(path), records)
    return str(path)


def assert_dirs_byte_identical(a, b):
    for name in STATE_FILES:
        fa, fb = os.path.join(a, name), os.path.join(b, name)
        assert filecmp.cmp(fa, fb, shallow=False), f"{name} differs"


class TestPersistence:
    def test_save_load_save_is_byte_identical(self, stream_path, tmp_path):
        engine = DetectionEngine(small_config(), model=permissive_model())
        engine.run_stream(stream_path, max_shifts=9)
        d1 = str(tmp_path / "s1")
        engine.save_state(d1)

        restored = DetectionEngine.load_state(d1)
        d2 = str(tmp_path / "s2")
        restored.save_state(d2)
        assert_dirs_byte_identical(d1, d2)

    def test_interrupted_run_equals_straight_run(self, stream_path, tmp_path):
        straight = DetectionEngine(small_config(), model=permissive_model())
        straight.run_stream(stream_path)
        d_straight = str(tmp_path / "straight")
        straight.save_state(d_straight)

        first = DetectionEngine(small_config(), model=permissive_model())
        first.run_stream(stream_path, max_shifts=7)
        mid = str(tmp_path / "mid")
        first.save_state(mid)
        resumed = DetectionEngine.load_state(mid)
        # no path: continues from the persisted cursor
        resumed.run_stream()
        d_resumed = str(tmp_path / "resumed")
        resumed.save_state(d_resumed)

        assert_dirs_byte_identical(d_straight, d_resumed)

    def test_loaded_engine_answers_queries(self, stream_path, tmp_path):
        engine = DetectionEngine(small_config(), model=permissive_model())
        engine.run_stream(stream_path)
        d = str(tmp_path / "q")
        engine.save_state(d)
        back = DetectionEngine.load_state(d)
        from georadar.events import EventQuery

        q = EventQuery(t_from=0)
        assert [r.event_id for r in back.query(q)] == [
            r.event_id for r in engine.query(q)
        ]
        assert back.status()["counters"] == engine.status()["counters"]


@pytest.fixture(scope="module")
def served_engine(stream_path):
    engine = DetectionEngine(small_config(), model=permissive_model())
    engine.run_stream(stream_path)
    return engine


@pytest.fixture(scope="module")
def client(served_engine):
    return TestClient(create_app(served_engine))


class TestApi:
    def test_events_listing_and_limit(self, client, served_engine):
        r = client.get("/events")
        assert r.status_code == 200
        body = r.json()
        assert body["count"] == len(served_engine.store)
        assert len(body["events"]) == body["count"]
        if body["count"] > 1:
            r2 = client.get("/events", params={"limit": 1})
            assert r2.json()["count"] == body["count"]
            assert len(r2.json()["events"]) == 1

    def test_events_time_filter_uses_aliases(self, client, served_engine):
        recs = served_engine.store.records
        assert recs, "fixture stream must emit events"
        pivot_t = recs[0].t_start
        r = client.get("/events", params={"from": pivot_t, "to": pivot_t + 10_000})
        assert r.status_code == 200
        for ev in r.json()["events"]:
            assert ev["t_end"] >= pivot_t and ev["t_start"] <= pivot_t + 10_000

    def test_events_bad_query_is_400(self, client):
        r = client.get("/events", params={"from": 100, "to": 50})
        assert r.status_code == 400
        r = client.get("/events", params={"lat": 40.0})
        assert r.status_code == 400

    def test_single_event_with_members(self, client, served_engine):
        rec = served_engine.store.records[0]
        r = client.get(f"/events/{rec.event_id}")
        assert r.status_code == 200
        body = r.json()
        assert body["event"]["event_id"] == rec.event_id
        assert [m["id"] for m in body["members"]] == list(rec.member_ids)

    def test_missing_event_is_404(self, client):
        assert client.get("/events/999999").status_code == 404

    def test_status_shape(self, client, served_engine):
        r = client.get("/status")
        assert r.status_code == 200
        body = r.json()
        assert body["tick"] == served_engine.tick
        assert body["window"]["size"] == len(served_engine.window)
        assert "counters" in body and "last_shift" in body


class TestCli:
    def write_config(self, tmp_path):
        p = tmp_path / "config.json"
        p.write_text(json.dumps({"window_s": 3600, "step_s": 600}))
        return str(p)

    def test_run_writes_events_file(self, stream_path, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        out = str(tmp_path / "events.json")
        rc = main(
            ["run", "--stream", stream_path, "--config", cfg, "--quiet",
             "--events-out", out]
        )
        assert rc == 0
        payload = read_state_file(out, "events")
        assert "records" in payload
        counters = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert counters["shifts"] > 0

    def test_save_then_query_state(self, stream_path, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        state = str(tmp_path / "state")
        model = tmp_path / "model.json"
        model.write_text(json.dumps(permissive_model().to_payload()))
        rc = main(
            ["save", "--stream", stream_path, "--config", cfg, "--quiet",
             "--model", str(model), "--state", state]
        )
        assert rc == 0
        capsys.readouterr()
        rc = main(["query", "--state", state, "--keyword", "burst00w0"])
        assert rc == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        for line in lines:
            rec = json.loads(line)
            assert "burst00w0" in rec["keywords"]

    def test_query_rejects_bad_span(self, stream_path, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        state = str(tmp_path / "state")
        main(["save", "--stream", stream_path, "--config", cfg, "--quiet",
              "--state", state])
        capsys.readouterr()
        rc = main(["query", "--state", state, "--from", "100", "--to", "50"])
        assert rc == 2

    def test_load_continues_and_reports(self, stream_path, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        state = str(tmp_path / "state")
        main(["save", "--stream", stream_path, "--config", cfg, "--quiet",
              "--shifts", "6", "--state", state])
        capsys.readouterr()
        rc = main(["load", "--state", state, "--quiet"])
        assert rc == 0
        counters = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert counters["shifts"] == 6

    def test_bench_reports_parity(self, stream_path, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        rc = main(["bench", "--stream", stream_path, "--config", cfg,
                   "--shifts", "8"])
        out = capsys.readouterr().out
        assert rc == 0, out
        rows = [l for l in out.splitlines() if l and not l.startswith(("#", "tick"))]
        assert len(rows) == 8
        for row in rows:
            assert row.rsplit(",", 1)[1] == "True"
