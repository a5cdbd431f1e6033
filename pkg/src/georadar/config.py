"""Configuration dataclasses for the detection engine.

Everything tunable lives here. `EngineConfig.from_dict` / `to_dict` give a
flat JSON form used by the CLI (--config / RADAR_CONFIG) and by persisted
state, so a restored engine always runs under the exact configuration it was
saved with.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class GraphConfig:
    restart_prob: float = 0.2          # teleport probability of the random walk
    epsilon: float = 1e-4              # vicinity approximation tolerance
    cache_drift: float = 0.10          # relative edge-weight drift before a
                                       # cached vicinity is recomputed


@dataclass(frozen=True)
class ClusterConfig:
    bandwidth_m: float = 2000.0        # geographic kernel bandwidth
    semantic_threshold: float = 0.02   # minimum semantic score for a neighbor
    min_support: int = 3               # smallest emitted candidate size


@dataclass(frozen=True)
class TimelineConfig:
    max_active: int = 200              # cap on concurrently tracked clusters
    boundary_factor: float = 2.0       # absorb radius = factor * spatial std
    singleton_radius_m: float = 500.0  # absorb radius for size-1 clusters
    stale_age_s: float = 86_400.0      # delete-when-over-cap age threshold
    stale_min_n: int = 5               # ...and only clusters smaller than this
    frame_base: int = 2                # pyramid frame base a
    frame_order_cap: int = 1           # pyramid l: keep a^l + 1 per order


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 50
    negatives: int = 5
    lr: float = 0.025
    lr_min: float = 1e-4
    lr_decay_steps: int = 1_000_000    # linear decay horizon in pair updates
    cache_size: int = 50_000
    replay_ratio: float = 0.1
    clip_norm: float = 5.0
    seed: int = 7


@dataclass(frozen=True)
class ClassifierConfig:
    l2: float = 1e-3
    lr: float = 0.5
    epochs: int = 500
    threshold: float = 0.5
    default_decision: bool = False     # verdict while history is still cold
    top_keywords: int = 10             # ranked keywords kept on an event


@dataclass(frozen=True)
class EngineConfig:
    window_s: int = 6 * 3600
    step_s: int = 600
    graph: GraphConfig = field(default_factory=GraphConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    timeline: TimelineConfig = field(default_factory=TimelineConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    stopwords_path: str | None = None  # None: packaged default list

    def __post_init__(self) -> None:
        if self.window_s <= 0 or self.step_s <= 0:
            raise ValueError("window and step must be positive")
        if self.step_s > self.window_s:
            raise ValueError("step must not exceed the window length")

    @property
    def history_lag_ticks(self) -> int:
        """Shifts until a snapshot is fully older than the current window."""
        return math.ceil(self.window_s / self.step_s)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "EngineConfig":
        kw: dict[str, Any] = dict(raw)
        for name, sub in (
            ("graph", GraphConfig),
            ("cluster", ClusterConfig),
            ("timeline", TimelineConfig),
            ("embedding", EmbeddingConfig),
            ("classifier", ClassifierConfig),
        ):
            if name in kw and isinstance(kw[name], dict):
                kw[name] = sub(**kw[name])
        return cls(**kw)

    @classmethod
    def load(cls, path: str | None = None) -> "EngineConfig":
        """Config from a JSON file, or RADAR_CONFIG, or defaults."""
        if path is None:
            path = os.environ.get("RADAR_CONFIG")
        if path is None:
            return cls()
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
