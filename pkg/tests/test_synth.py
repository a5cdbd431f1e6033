"""Synthetic stream generator: determinism, truth consistency, matching."""

import dataclasses
import json

from georadar.geo import haversine_m
from georadar.ingest import StreamCursor, load_stopwords, parse_record

STOPWORDS = load_stopwords()
from georadar.synth import (
    SynthConfig,
    generate_stream,
    load_truth,
    match_burst,
    write_stream,
    write_truth,
)

CFG = SynthConfig(
    seed=77,
    duration_s=6 * 3600,
    bg_rate_per_h=60.0,
    vocab_size=40,
    n_bursts=3,
    burst_warmup_s=3600,
    burst_span_s=900,
    burst_tail_s=1800,
)


def test_same_config_same_stream():
    recs_a, truth_a = generate_stream(CFG)
    recs_b, truth_b = generate_stream(CFG)
    assert json.dumps(recs_a) == json.dumps(recs_b)
    assert truth_a == truth_b


def test_records_sorted_and_parseable():
    recs, _ = generate_stream(CFG)
    ts = [r["timestamp"] for r in recs]
    assert ts == sorted(ts)
    ids = [r["id"] for r in recs]
    assert len(set(ids)) == len(ids)
    for raw in recs:
        parse_record(json.dumps(raw), STOPWORDS)


def test_truth_members_exist_and_carry_burst_words():
    recs, truth = generate_stream(CFG)
    by_id = {r["id"]: r for r in recs}
    assert len(truth) == CFG.n_bursts
    for burst in truth:
        assert burst.t_start >= CFG.t0 + CFG.burst_warmup_s
        assert burst.t_end <= CFG.t0 + CFG.duration_s
        for tid in burst.tweet_ids:
            rec = by_id[tid]
            assert burst.t_start <= rec["timestamp"] <= burst.t_end
            # every member mentions at least one dedicated burst word
            assert set(rec["text"].split()) & set(burst.words)
            assert haversine_m(rec["lat"], rec["lon"], burst.lat, burst.lon) < 2000.0


def test_even_arrivals_spacing():
    cfg = dataclasses.replace(CFG, even_arrivals=True, n_bursts=0)
    recs, _ = generate_stream(cfg)
    gaps = {
        b["timestamp"] - a["timestamp"] for a, b in zip(recs, recs[1:])
    }
    assert gaps == {CFG.duration_s // len(recs)}


def test_match_burst_window():
    _, truth = generate_stream(CFG)
    b = truth[0]
    assert match_burst(truth, b.lat, b.lon, b.t_start, b.t_end) == b.burst_id
    # slack: a span ending shortly before the burst still matches
    assert match_burst(truth, b.lat, b.lon, b.t_start - 700, b.t_start - 300) == b.burst_id
    assert match_burst(truth, b.lat, b.lon, b.t_start - 5000, b.t_start - 4000) is None
    assert match_burst(truth, b.lat + 0.5, b.lon, b.t_start, b.t_end) is None
    assert match_burst([], b.lat, b.lon, b.t_start, b.t_end) is None


def test_stream_and_truth_files_round_trip(tmp_path):
    recs, truth = generate_stream(CFG)
    spath = tmp_path / "stream.jsonl"
    tpath = tmp_path / "truth.json"
    write_stream(str(spath), recs)
    write_truth(str(tpath), truth)
    assert load_truth(str(tpath)) == truth
    cursor = StreamCursor(str(spath), STOPWORDS)
    got = cursor.take_until(10**18)
    assert len(got) == len(recs)
    assert cursor.stats["comments_or_blank"] == 1
    assert [t.id for t in got] == [r["id"] for r in recs]
