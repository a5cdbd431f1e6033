"""Synthetic geo-text streams with planted bursts.

Background tweets draw zipf-weighted words from a common vocabulary,
uniformly over a bounding box and the stream duration. Each planted burst is
a tight cluster in space (gaussian around a center) and time (a short span)
with its own dedicated vocabulary plus one common word per tweet, written by
distinct users. Ground truth (centers, spans, words, member ids) is returned
alongside the records.

Everything is driven by one seeded generator, so a (config, seed) pair
always produces the identical stream file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geo import M_PER_DEG_LAT


@dataclass(frozen=True)
class PlantedBurst:
    burst_id: int
    lat: float
    lon: float
    t_start: int
    t_end: int
    words: tuple[str, ...]
    tweet_ids: tuple[str, ...]

    def to_payload(self) -> dict:
        return {
            "burst_id": self.burst_id,
            "lat": self.lat,
            "lon": self.lon,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "words": list(self.words),
            "tweet_ids": list(self.tweet_ids),
        }

    @classmethod
    def from_payload(cls, raw: dict) -> "PlantedBurst":
        return cls(
            burst_id=raw["burst_id"],
            lat=raw["lat"],
            lon=raw["lon"],
            t_start=raw["t_start"],
            t_end=raw["t_end"],
            words=tuple(raw["words"]),
            tweet_ids=tuple(raw["tweet_ids"]),
        )


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 1
    t0: int = 1_700_000_000
    duration_s: int = 36 * 3600
    bg_rate_per_h: float = 110.0
    lat_range: tuple[float, float] = (40.60, 40.90)
    lon_range: tuple[float, float] = (-74.10, -73.80)
    vocab_size: int = 300
    words_per_tweet: int = 4
    # 0 flattens the word distribution to uniform
    zipf_exponent: float = 0.8
    # evenly spaced background arrivals instead of uniform random times;
    # keeps sliding-window counts essentially constant
    even_arrivals: bool = False
    n_bg_users: int = 400
    n_bursts: int = 0
    burst_size: tuple[int, int] = (15, 25)
    burst_sigma_m: float = 120.0
    burst_span_s: int = 1800
    burst_words: int = 3
    # bursts start no earlier than this offset, so detection has history
    burst_warmup_s: int = 14 * 3600
    burst_tail_s: int = 2 * 3600


def _common_vocab(size: int) -> list[str]:
    return [f"word{i:03d}" for i in range(size)]


def generate_stream(
    cfg: SynthConfig,
) -> tuple[list[dict], list[PlantedBurst]]:
    """Records (time-sorted, ids assigned in time order) and ground truth."""
    rng = np.random.default_rng(cfg.seed)
    vocab = _common_vocab(cfg.vocab_size)
    ranks = np.arange(1, cfg.vocab_size + 1, dtype=np.float64)
    probs = ranks**-cfg.zipf_exponent
    probs /= probs.sum()

    rows: list[dict] = []  # provisional, with burst tag

    n_bg = int(cfg.bg_rate_per_h * cfg.duration_s / 3600.0)
    if cfg.even_arrivals:
        ts = (np.arange(n_bg, dtype=np.float64) * cfg.duration_s / n_bg).astype(np.int64)
    else:
        ts = rng.integers(0, cfg.duration_s, size=n_bg)
    lats = rng.uniform(*cfg.lat_range, size=n_bg)
    lons = rng.uniform(*cfg.lon_range, size=n_bg)
    users = rng.integers(0, cfg.n_bg_users, size=n_bg)
    word_idx = rng.choice(cfg.vocab_size, size=(n_bg, cfg.words_per_tweet), p=probs)
    for i in range(n_bg):
        rows.append(
            {
                "timestamp": cfg.t0 + int(ts[i]),
                "lat": float(lats[i]),
                "lon": float(lons[i]),
                "user_id": f"bg{int(users[i]):04d}",
                "text": " ".join(vocab[j] for j in word_idx[i]),
                "burst": None,
            }
        )

    truth_meta = []
    latest_start = cfg.duration_s - cfg.burst_span_s - cfg.burst_tail_s
    if cfg.n_bursts > 0 and latest_start <= cfg.burst_warmup_s:
        raise ValueError("stream too short for the requested burst window")
    for b in range(cfg.n_bursts):
        start = int(rng.integers(cfg.burst_warmup_s, latest_start))
        lat = float(rng.uniform(*cfg.lat_range))
        lon = float(rng.uniform(*cfg.lon_range))
        size = int(rng.integers(cfg.burst_size[0], cfg.burst_size[1] + 1))
        words = tuple(f"burst{b:02d}w{k}" for k in range(cfg.burst_words))
        sigma_lat = cfg.burst_sigma_m / M_PER_DEG_LAT
        sigma_lon = sigma_lat / max(0.1, math.cos(math.radians(lat)))
        t_end = 0
        for j in range(size):
            jitter = rng.normal(0.0, 1.0, size=2)
            t_off = int(rng.integers(0, cfg.burst_span_s))
            t_end = max(t_end, start + t_off)
            common = vocab[int(rng.choice(cfg.vocab_size, p=probs))]
            rows.append(
                {
                    "timestamp": cfg.t0 + start + t_off,
                    "lat": float(np.clip(lat + jitter[0] * sigma_lat, *cfg.lat_range)),
                    "lon": float(np.clip(lon + jitter[1] * sigma_lon, *cfg.lon_range)),
                    "user_id": f"ev{b:02d}u{j:02d}",
                    "text": " ".join(words) + " " + common,
                    "burst": b,
                }
            )
        truth_meta.append((b, lat, lon, cfg.t0 + start, cfg.t0 + t_end, words))

    rows.sort(key=lambda r: (r["timestamp"], r["lat"], r["lon"]))
    members: dict[int, list[str]] = {b: [] for b in range(cfg.n_bursts)}
    records = []
    for i, row in enumerate(rows):
        tid = f"t{i:06d}"
        if row["burst"] is not None:
            members[row["burst"]].append(tid)
        records.append(
            {
                "id": tid,
                "user_id": row["user_id"],
                "timestamp": row["timestamp"],
                "lat": row["lat"],
                "lon": row["lon"],
                "text": row["text"],
            }
        )
    truth = [
        PlantedBurst(
            burst_id=b,
            lat=lat,
            lon=lon,
            t_start=t_start,
            t_end=t_end,
            words=words,
            tweet_ids=tuple(members[b]),
        )
        for b, lat, lon, t_start, t_end, words in truth_meta
    ]
    return records, truth


def write_stream(path: str, records: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# synthetic geo-text stream\n")
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_truth(path: str, truth: Sequence[PlantedBurst]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([b.to_payload() for b in truth], fh, indent=2)


def load_truth(path: str) -> list[PlantedBurst]:
    with open(path, "r", encoding="utf-8") as fh:
        return [PlantedBurst.from_payload(raw) for raw in json.load(fh)]


def match_burst(
    truth: Sequence[PlantedBurst],
    lat: float,
    lon: float,
    t_start: int,
    t_end: int,
    radius_m: float = 1000.0,
    time_slack_s: int = 600,
) -> int | None:
    """Ground-truth burst a detection corresponds to, or None.

    A detection matches when its pivot lies within radius_m of the burst
    center and its member span overlaps the burst span (with slack).
    """
    from .geo import haversine_m

    for b in truth:
        if t_start > b.t_end + time_slack_s or t_end < b.t_start - time_slack_s:
            continue
        if haversine_m(lat, lon, b.lat, b.lon) <= radius_m:
            return b.burst_id
    return None
